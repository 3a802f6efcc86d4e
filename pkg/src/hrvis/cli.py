"""Command-line front end: ``hrvis <subcommand> [flags]``.

Exit codes: 0 success, 2 usage error, 3 data error, 4 transport error.
Every run writes a manifest (JSON, sha256 of each artifact) beside its
outputs. An optional TOML config supplies flag defaults per subcommand;
flags given on the command line win.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .circadian import DAY_NAMES, METRICS, clock_points, local_days, week_grid
from .embedding import TsneConfig, grid_sweep, silhouette, subsample_rows
from .errors import DataError, InvalidConfig, TransportError, UnparseableResponse
from .evalharness import (
    VISUALIZATIONS,
    EndpointClient,
    EndpointConfig,
    ScaleResponse,
    administer_all,
    load_fixture,
    personas,
    scales,
    verify_tables,
)
from .hrvmetrics import (
    FEATURE_COLUMNS,
    WEEKEND_COLUMN,
    WindowSpec,
    local_hour_and_weekend,
    standardize,
    window_features,
)
from .poincare import poincare_pairs, sd1_sd2
from .recurrence import RecurrenceConfig, recurrence_from_series
from .render import (
    RenderSpec,
    render_clock,
    render_grid,
    render_matrix,
    render_scatter,
    render_spectrogram,
    with_title,
)
from .spectral import bin_spectrogram, resample_rr, spectrogram
from .synthgen import GeneratorConfig, generate_week
from .timeseries import (
    CleaningPolicy,
    RrSeries,
    clean_rr,
    derive_hr,
    export_hr_csv,
    export_rr_csv,
    parse_rr_csv,
)

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

log = logging.getLogger("hrvis")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_TRANSPORT = 0, 2, 3, 4

# display budgets; analyses always use the full series
SCATTER_POINTS = 20000
CLOCK_POINTS = 5000
SPECTROGRAM_COLUMNS = 720
SPECTROGRAM_MAX_HZ = 0.5
PIPELINE_TSNE_ROWS = 2000


# --------------------------------------------------------------------------
# manifest


@dataclass
class RunManifest:
    command: str
    config: dict
    inputs: dict[str, str] = field(default_factory=dict)
    outputs: dict[str, str] = field(default_factory=dict)
    seed: int | None = None
    tool_version: str = __version__

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"


def sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


class Outputs:
    """Collects artifacts under one target and records their hashes."""

    def __init__(self, manifest: RunManifest, root: Path, manifest_path: Path):
        self.manifest = manifest
        self.root = root
        self.manifest_path = manifest_path

    def write(self, name: str, content: str | bytes) -> Path:
        data = content.encode("utf-8") if isinstance(content, str) else content
        path = self.root / name
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(data)
        self.manifest.outputs[name] = sha256(data)
        log.info("wrote %s", path)
        return path

    def close(self) -> None:
        self.manifest_path.parent.mkdir(parents=True, exist_ok=True)
        self.manifest_path.write_text(self.manifest.to_json(), encoding="utf-8")


def _dir_outputs(command: str, args, out_dir: Path) -> Outputs:
    out_dir.mkdir(parents=True, exist_ok=True)
    m = RunManifest(command, _resolved(args), seed=getattr(args, "seed", None))
    return Outputs(m, out_dir, out_dir / "manifest.json")


def _file_outputs(command: str, args, out_file: Path) -> Outputs:
    m = RunManifest(command, _resolved(args), seed=getattr(args, "seed", None))
    return Outputs(m, out_file.parent, out_file.parent / f"{out_file.name}.manifest.json")


def _resolved(args) -> dict:
    # output location is excluded so identical runs into different
    # directories produce identical manifests
    skip = {"command", "func", "out", "config", "verbose"}
    cfg = {}
    for k, v in sorted(vars(args).items()):
        if k in skip:
            continue
        if isinstance(v, Path):
            v = v.as_posix()
        cfg[k] = list(v) if isinstance(v, tuple) else v
    return cfg


def _record_input(out: Outputs, path: Path) -> None:
    out.manifest.inputs[str(path)] = sha256(path.read_bytes())


# --------------------------------------------------------------------------
# shared steps


def _read_series(path: Path, clean: bool) -> RrSeries:
    series = parse_rr_csv(path.read_text(encoding="utf-8"))
    if clean:
        series, rejected = clean_rr(series, CleaningPolicy())
        if rejected:
            log.info("cleaning rejected %d of %d beats", len(rejected), len(series) + len(rejected))
    return series


def _generator_config(args) -> GeneratorConfig:
    values = {
        "days": args.days,
        "seed": args.seed,
        "baseline_bpm": args.baseline_bpm,
        "respiratory_hz": args.respiratory_hz,
        "rsa_amplitude_ms": args.rsa_amplitude_ms,
        "noise_sd_ms": args.noise_sd_ms,
        "exercise_bouts_per_day": args.exercise_bouts_per_day,
        "weekend_shift_hours": args.weekend_shift_hours,
    }
    return GeneratorConfig.from_mapping({k: v for k, v in values.items() if v is not None})


def _heatmap(series: RrSeries, metric: str, utc_offset_h: float):
    grid = week_grid(series, metric, utc_offset_h)
    if metric == "mean_bpm":
        spec = with_title(RenderSpec(palette="twilight"), "Mean heart rate by weekday and hour", "hour of day")
    else:
        spec = with_title(RenderSpec(palette="aurora_green"), "RMSSD by weekday and hour", "hour of day")
    return render_grid(grid, spec), grid.to_json()


def _clock(series: RrSeries, day: int, utc_offset_h: float) -> str:
    pts = clock_points(series, day, utc_offset_h)
    keep = subsample_rows(pts.angles.size, CLOCK_POINTS)
    pts = replace(pts, angles=pts.angles[keep], radii=pts.radii[keep], rr_ms=pts.rr_ms[keep])
    spec = RenderSpec(width_px=520, height_px=540, margin_left=40, margin_right=40, margin_bottom=60, palette="twilight")
    return render_clock(pts, with_title(spec, "RR intervals on a 24-hour dial"))


def _recurrence(series: RrSeries, config: RecurrenceConfig):
    """Thresholded plot plus the graded distance plot it was cut from."""
    matrix, dist = recurrence_from_series(series.intervals, config)
    spec = RenderSpec(width_px=560, height_px=560, palette="mona_lisa", margin_right=110)
    svg = render_matrix(matrix, with_title(spec, "Recurrence plot", "time index", "time index"))
    graded = render_matrix(
        dist, with_title(spec, "Recurrence distances", "time index", "time index"), binary=False
    )
    return svg, graded, matrix


def _spectrogram(series: RrSeries, hz: float, window_s: float, step_s: float):
    spec_data = spectrogram(resample_rr(series, hz), window_s, step_s)
    shown = bin_spectrogram(spec_data, SPECTROGRAM_COLUMNS)
    rspec = with_title(RenderSpec(palette="van_gogh", log_scale=True), "RR spectrogram", "time", "frequency (Hz)")
    svg = render_spectrogram(shown, rspec, SPECTROGRAM_MAX_HZ)
    return svg, spec_data


def _poincare(series: RrSeries, level: float, utc_offset_h: float):
    pairs = poincare_pairs(series)
    summary = sd1_sd2(pairs, level)
    keep = subsample_rows(len(pairs), SCATTER_POINTS)
    pts = np.column_stack([pairs.x[keep], pairs.y[keep]])
    spec = RenderSpec(width_px=560, height_px=490, margin_right=70, palette="plasma_layers")  # square plot area
    spec = with_title(spec, "Poincaré plot", "RR(n) ms", "RR(n+1) ms")
    svg = render_scatter(pts, spec, identity_line=True, ellipse=summary.ellipse, density=True)
    report = summary.to_json()
    report["per_day"] = _poincare_per_day(series, level, utc_offset_h)
    return svg, report


def _poincare_per_day(series: RrSeries, level: float, utc_offset_h: float) -> list[dict]:
    out = []
    for k in range(len(local_days(series, utc_offset_h))):
        try:
            day = clock_points(series, k, utc_offset_h)
        except DataError:
            continue
        if day.rr_ms.size < 3:
            continue
        s = sd1_sd2(poincare_pairs(day.rr_ms), level)
        out.append({"day": day.day_label, "sd1_ms": s.sd1_ms, "sd2_ms": s.sd2_ms, "ratio": s.ratio, "n_pairs": s.n_pairs})
    return out


def _features(series: RrSeries, window_s: float, step_s: float, utc_offset_h: float):
    return window_features(series, WindowSpec(window_s, step_s), utc_offset_h)


def _tsne(series: RrSeries, args, perplexities, max_rows: int):
    """One run per perplexity; each run gets weekend, hour and weekday colourings."""
    feats = standardize(_features(series, args.window_s, args.step_s, args.utc_offset_hours))
    rows = subsample_rows(len(feats), max_rows)
    x = feats.values[rows]
    starts = feats.window_starts[rows]
    weekend = feats.values[rows, WEEKEND_COLUMN].astype(int)
    mids = starts + args.window_s / 2.0
    hour, _ = local_hour_and_weekend(mids, args.utc_offset_hours)
    weekday = ((np.floor((mids + args.utc_offset_hours * 3600.0) / 86400.0) + 3) % 7).astype(int)
    base = TsneConfig(iterations=args.iterations, seed=args.seed)
    runs = grid_sweep(x, perplexities, args.dims, base)
    artifacts = {}
    summary = {"rows": int(x.shape[0]), "features": list(FEATURE_COLUMNS), "runs": []}
    axes = ["x", "y", "z"][: args.dims]
    colourings = (
        ("weekend", weekend, True, {0: "weekday", 1: "weekend"}),
        ("hour", hour, False, None),
        ("day", weekday, True, {d: DAY_NAMES[d][:3] for d in sorted(set(weekday.tolist()))}),
    )
    for emb in runs:
        perp = emb.meta["perplexity"]
        tag = f"p{perp:g}"
        lines = ["row_index,window_start," + ",".join(axes) + ",hour,is_weekend"]
        for i, (r, t, p, h, w) in enumerate(zip(rows, starts, emb.points, hour, weekend)):
            lines.append(f"{r},{t:.3f}," + ",".join(f"{v:.6f}" for v in p) + f",{h:.4f},{w}")
        names = {"csv": f"tsne_{tag}.csv"}
        artifacts[names["csv"]] = "\r\n".join(lines) + "\r\n"
        for key, labels, categorical_labels, legend in colourings:
            palette = "categorical10" if categorical_labels else "twilight"
            spec = RenderSpec(width_px=560, height_px=520, margin_right=110, palette=palette)
            spec = with_title(spec, f"t-SNE of window features (perplexity {perp:g}, by {key})", "t-SNE 1", "t-SNE 2")
            names[key] = f"tsne_{tag}_{key}.svg"
            artifacts[names[key]] = render_scatter(
                emb.points, spec, labels=labels, categorical_labels=categorical_labels, legend_names=legend
            )
        summary["runs"].append(
            {
                "perplexity": perp,
                "seed": emb.config.seed,
                "dims": args.dims,
                "outputs": names,
                "kl_iterations": emb.kl_iterations,
                "kl_trace": emb.kl_trace,
                "weekend_silhouette": silhouette(emb.points, weekend)
                if 0 < weekend.sum() < weekend.size
                else None,
            }
        )
    return artifacts, summary


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def _compact(obj) -> str:
    return json.dumps(obj, separators=(",", ":"), sort_keys=True, allow_nan=False) + "\n"


# --------------------------------------------------------------------------
# subcommands


def cmd_generate(args) -> int:
    cfg = _generator_config(args)
    series = generate_week(cfg)
    out = _file_outputs("generate", args, args.out)
    out.write(args.out.name, export_rr_csv(series))
    if args.with_hr:
        out.write(f"{args.out.stem}.hr.csv", export_hr_csv(derive_hr(series, args.hr_step_s)))
    out.close()
    return EXIT_OK


def cmd_metrics(args) -> int:
    series = _read_series(args.input, not args.no_clean)
    feats = _features(series, args.window_s, args.step_s, args.utc_offset_hours)
    if args.standardize:
        feats = standardize(feats)
    out = _file_outputs("metrics", args, args.out)
    _record_input(out, args.input)
    out.write(args.out.name, feats.to_csv())
    out.close()
    return EXIT_OK


def cmd_heatmap(args) -> int:
    series = _read_series(args.input, not args.no_clean)
    svg, grid = _heatmap(series, args.metric, args.utc_offset_hours)
    out = _dir_outputs("heatmap", args, args.out)
    _record_input(out, args.input)
    out.write(f"heatmap_{args.metric}.svg", svg)
    out.write(f"heatmap_{args.metric}.json", _dump(grid))
    out.close()
    return EXIT_OK


def cmd_clock(args) -> int:
    series = _read_series(args.input, not args.no_clean)
    out = _dir_outputs("clock", args, args.out)
    _record_input(out, args.input)
    out.write(f"clock_day{args.day}.svg", _clock(series, args.day, args.utc_offset_hours))
    out.close()
    return EXIT_OK


def _recurrence_config(args) -> RecurrenceConfig:
    return RecurrenceConfig(
        embed_dim=args.embed_dim,
        delay=args.delay,
        epsilon=args.epsilon,
        target_rate=args.target_rate,
        max_points=args.max_points,
        norm=args.norm,
    )


def cmd_recurrence(args) -> int:
    series = _read_series(args.input, not args.no_clean)
    svg, graded, matrix = _recurrence(series, _recurrence_config(args))
    out = _dir_outputs("recurrence", args, args.out)
    _record_input(out, args.input)
    out.write("recurrence.svg", svg)
    out.write("recurrence_graded.svg", graded)
    out.write("recurrence.json", _compact(matrix.to_json()))
    out.close()
    return EXIT_OK


def cmd_spectrogram(args) -> int:
    series = _read_series(args.input, not args.no_clean)
    svg, spec_data = _spectrogram(series, args.hz, args.window_s, args.step_s)
    out = _dir_outputs("spectrogram", args, args.out)
    _record_input(out, args.input)
    out.write("spectrogram.svg", svg)
    out.write("spectrogram.json", _compact(spec_data.to_json(SPECTROGRAM_MAX_HZ)))
    out.close()
    return EXIT_OK


def cmd_tsne(args) -> int:
    series = _read_series(args.input, not args.no_clean)
    artifacts, summary = _tsne(series, args, args.perplexities, args.max_rows)
    out = _dir_outputs("tsne", args, args.out)
    _record_input(out, args.input)
    for name, text in artifacts.items():
        out.write(name, text)
    out.write("tsne.json", _dump(summary))
    out.close()
    return EXIT_OK


def cmd_poincare(args) -> int:
    series = _read_series(args.input, not args.no_clean)
    svg, report = _poincare(series, args.level, args.utc_offset_hours)
    out = _dir_outputs("poincare", args, args.out)
    _record_input(out, args.input)
    out.write("poincare.svg", svg)
    out.write("poincare.json", _dump(report))
    out.close()
    return EXIT_OK


def _evaluate(args, out: Outputs) -> list[ScaleResponse]:
    all_personas = personas()
    all_scales = scales()
    wanted_scales = args.scales
    wanted_personas = args.personas or list(all_personas)
    for pid in wanted_personas:
        if pid not in all_personas:
            raise InvalidConfig(f"unknown persona {pid!r}")
    if args.offline is not None:
        fixture = load_fixture(args.offline)
        _record_input(out, args.offline)
        keys = [
            k for k in fixture if k[0] in wanted_personas and (wanted_scales is None or k[2] in wanted_scales)
        ]
        keys.sort(key=lambda k: (VISUALIZATIONS.index(k[1]) if k[1] in VISUALIZATIONS else 99, wanted_personas.index(k[0]), k[2]))
        jobs = [(None, all_personas[p], all_scales[s], v) for p, v, s in keys]
        return administer_all(jobs, fixture=fixture)
    if args.images is None:
        raise InvalidConfig("online evaluation needs --images DIR holding one image per visualization")
    client = EndpointClient(EndpointConfig.from_env())
    jobs = []
    for vis in VISUALIZATIONS:
        image = next((args.images / f"{vis}{ext}" for ext in (".png", ".svg") if (args.images / f"{vis}{ext}").exists()), None)
        if image is None:
            raise InvalidConfig(f"no image for {vis} in {args.images}")
        for pid in wanted_personas:
            for sid in wanted_scales or ("beauvis", "previs"):
                jobs.append((image, all_personas[pid], all_scales[sid], vis))
    return administer_all(jobs, client=client)


def cmd_evaluate(args) -> int:
    if args.offline is None and not args.online:
        sys.stderr.write("hrvis evaluate: choose --offline FIXTURE or --online\n")
        return EXIT_USAGE
    out = _file_outputs("evaluate", args, args.out)
    responses = _evaluate(args, out)
    out.write(args.out.name, _dump([r.to_json() for r in responses]))
    out.close()
    return EXIT_OK


def _verify_into(responses, out: Outputs) -> None:
    report = verify_tables(responses)
    out.write("verification.md", report.to_markdown())
    out.write("verification.json", report.dumps())
    sys.stderr.write(f"verification: {report.n_match} of {len(report.cells)} cells match\n")
    for c in report.mismatches:
        sys.stderr.write(f"  MISMATCH {c.persona}/{c.visualization} {c.subscale}: computed {c.computed} vs printed {c.printed}\n")


def _load_responses(path: Path) -> list[ScaleResponse]:
    try:
        entries = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: not JSON ({exc})") from None
    all_scales = scales()
    try:
        return [ScaleResponse.from_json(e, all_scales[e["scale"]]) for e in entries]
    except (KeyError, TypeError) as exc:
        raise DataError(f"{path}: malformed response entry ({exc})") from None


def cmd_verify(args) -> int:
    responses = _load_responses(args.responses)
    out = _dir_outputs("verify", args, args.out)
    _record_input(out, args.responses)
    _verify_into(responses, out)
    out.close()
    return EXIT_OK


def cmd_pipeline(args) -> int:
    cfg = _generator_config(args)
    out = _dir_outputs("pipeline", args, args.out)
    series = generate_week(cfg)
    out.write("rr.csv", export_rr_csv(series))
    series, _ = clean_rr(series, CleaningPolicy())

    out.write("features.csv", _features(series, args.window_s, args.step_s, args.utc_offset_hours).to_csv())
    for metric in METRICS:
        svg, grid = _heatmap(series, metric, args.utc_offset_hours)
        name = "heatmap" if metric == "mean_bpm" else f"heatmap_{metric}"
        out.write(f"{name}.svg", svg)
        out.write(f"{name}.json", _dump(grid))
    out.write("clock.svg", _clock(series, 0, args.utc_offset_hours))

    svg, graded, matrix = _recurrence(series, RecurrenceConfig())
    out.write("recurrence.svg", svg)
    out.write("recurrence_graded.svg", graded)
    out.write("recurrence.json", _compact(matrix.to_json()))

    svg, spec_data = _spectrogram(series, 4.0, 300.0, 30.0)
    out.write("spectrogram.svg", svg)
    out.write("spectrogram.json", _compact(spec_data.to_json(SPECTROGRAM_MAX_HZ)))

    svg, report = _poincare(series, 0.95, args.utc_offset_hours)
    out.write("poincare.svg", svg)
    out.write("poincare.json", _dump(report))

    artifacts, tsne_summary = _tsne(series, args, [args.perplexity], args.tsne_max_rows)
    for name, text in artifacts.items():
        out.write(name, text)
    out.write("tsne.svg", artifacts[f"tsne_p{args.perplexity:g}_weekend.svg"])
    out.write("tsne.json", _dump(tsne_summary))

    if args.offline is not None:
        args.online, args.images, args.personas, args.scales = False, None, None, None
        responses = _evaluate(args, out)
        out.write("responses.json", _dump([r.to_json() for r in responses]))
        _verify_into(responses, out)
    out.close()
    return EXIT_OK


# --------------------------------------------------------------------------
# parser


def _csv_floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _csv_words(text: str) -> list[str]:
    return [v.strip() for v in text.split(",") if v.strip()]


def _add_generator_flags(p) -> None:
    p.add_argument("--days", type=int, default=7)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--baseline-bpm", type=float)
    p.add_argument("--respiratory-hz", type=float)
    p.add_argument("--rsa-amplitude-ms", type=float)
    p.add_argument("--noise-sd-ms", type=float)
    p.add_argument("--exercise-bouts-per-day", type=float)
    p.add_argument("--weekend-shift-hours", type=float)


def _add_input(p) -> None:
    p.add_argument("--input", type=Path, required=True, help="RR CSV (timestamp, rr_interval_ms, heart_rate_bpm)")
    p.add_argument("--no-clean", action="store_true", help="skip artifact rejection")
    p.add_argument("--utc-offset-hours", type=float, default=0.0)


def _add_window(p) -> None:
    p.add_argument("--window-s", type=float, default=300.0)
    p.add_argument("--step-s", type=float, default=30.0)


def _add_tsne_flags(p) -> None:
    p.add_argument("--dims", type=int, choices=(2, 3), default=2)
    p.add_argument("--iterations", type=int, default=1000)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hrvis", description="Synthetic HRV analysis and visualization toolkit")
    parser.add_argument("--version", action="version", version=f"hrvis {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML file with per-subcommand defaults")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    def add(name, func, help_text):
        p = sub.add_parser(name, parents=[common], help=help_text, description=help_text)
        p.set_defaults(func=func)
        return p

    p = add("generate", cmd_generate, "generate a synthetic RR series as CSV")
    _add_generator_flags(p)
    p.add_argument("--with-hr", action="store_true", help="also write <stem>.hr.csv with sampled heart rate")
    p.add_argument("--hr-step-s", type=float, default=60.0)
    p.add_argument("--out", type=Path, required=True)

    p = add("metrics", cmd_metrics, "sliding-window feature matrix as CSV")
    _add_input(p)
    _add_window(p)
    p.add_argument("--standardize", action="store_true")
    p.add_argument("--out", type=Path, required=True)

    p = add("heatmap", cmd_heatmap, "weekday x hour heatmap (SVG + JSON)")
    _add_input(p)
    p.add_argument("--metric", choices=METRICS, default="mean_bpm")
    p.add_argument("--out", type=Path, required=True, help="output directory")

    p = add("clock", cmd_clock, "24-hour clock face of one day (SVG)")
    _add_input(p)
    p.add_argument("--day", type=int, default=0, help="day index from the first local day")
    p.add_argument("--out", type=Path, required=True, help="output directory")

    p = add("recurrence", cmd_recurrence, "recurrence plot (SVG + JSON)")
    _add_input(p)
    p.add_argument("--embed-dim", type=int, default=3)
    p.add_argument("--delay", type=int, default=4)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--target-rate", type=float, default=0.10)
    p.add_argument("--max-points", type=int, default=4096)
    p.add_argument("--norm", choices=("euclidean", "max"), default="euclidean")
    p.add_argument("--out", type=Path, required=True, help="output directory")

    p = add("spectrogram", cmd_spectrogram, "sliding-window power spectrum (SVG + JSON)")
    _add_input(p)
    _add_window(p)
    p.add_argument("--hz", type=float, default=4.0)
    p.add_argument("--out", type=Path, required=True, help="output directory")

    p = add("tsne", cmd_tsne, "t-SNE of window features; one run per perplexity (CSV + SVG)")
    _add_input(p)
    _add_window(p)
    _add_tsne_flags(p)
    p.add_argument("--perplexities", type=_csv_floats, default=[30.0])
    p.add_argument("--max-rows", type=int, default=5000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", type=Path, required=True, help="output directory")

    p = add("poincare", cmd_poincare, "Poincaré plot with SD1/SD2 and confidence ellipse (SVG + JSON)")
    _add_input(p)
    p.add_argument("--level", type=float, choices=(0.90, 0.95, 0.99), default=0.95)
    p.add_argument("--out", type=Path, required=True, help="output directory")

    p = add("evaluate", cmd_evaluate, "administer rating scales as personas (endpoint or offline fixture)")
    mode = p.add_mutually_exclusive_group()
    mode.add_argument("--offline", type=Path, metavar="FIXTURE", help="canned labels; no network")
    mode.add_argument("--online", action="store_true", help="query the EVAL_ENDPOINT model")
    p.add_argument("--images", type=Path, help="directory with <visualization>.svg|.png (online mode)")
    p.add_argument("--personas", type=_csv_words)
    p.add_argument("--scales", type=_csv_words)
    p.add_argument("--out", type=Path, default=Path("responses.json"))

    p = add("verify", cmd_verify, "recompute aggregates and compare with the printed tables")
    p.add_argument("--responses", type=Path, default=Path("responses.json"))
    p.add_argument("--out", type=Path, default=Path("verification"), help="output directory")

    p = add("pipeline", cmd_pipeline, "generate a week and run every analysis")
    _add_generator_flags(p)
    _add_window(p)
    _add_tsne_flags(p)
    p.add_argument("--utc-offset-hours", type=float, default=0.0)
    p.add_argument("--perplexity", type=float, default=30.0)
    p.add_argument("--tsne-max-rows", type=int, default=PIPELINE_TSNE_ROWS)
    p.add_argument("--offline", type=Path, metavar="FIXTURE", help="also evaluate + verify from a fixture")
    p.add_argument("--out", type=Path, required=True, help="output directory")
    return parser


def _apply_config(parser: argparse.ArgumentParser, argv: list[str]) -> argparse.Namespace:
    """Parse ``argv`` with defaults taken from the ``[command]`` table of --config."""
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config", type=Path)
    known, _ = pre.parse_known_args(argv)
    choices = parser._subparsers._group_actions[0].choices  # noqa: SLF001
    command = next((a for a in argv if a in choices), None)
    if known.config is None or command is None:
        return parser.parse_args(argv)
    try:
        data = tomllib.loads(known.config.read_text(encoding="utf-8"))
    except (OSError, tomllib.TOMLDecodeError) as exc:
        parser.error(f"cannot read config {known.config}: {exc}")
    section = data.get(command, {})
    if not isinstance(section, dict):
        parser.error(f"config section [{command}] must be a table")
    sub = choices[command]
    actions = {a.dest: a for a in sub._actions}  # noqa: SLF001
    defaults = {}
    for key, value in section.items():
        dest = key.replace("-", "_")
        if dest not in actions or dest in {"help", "config", "verbose"}:
            parser.error(f"config key {key!r} is not a {command} option")
        action = actions[dest]
        if action.type is not None and isinstance(value, str):
            value = action.type(value)
        defaults[dest] = value
        # a value from the file satisfies a required flag
        action.required = False
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def run(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except (TransportError, UnparseableResponse) as exc:
        sys.stderr.write(f"hrvis: transport error: {exc}\n")
        return EXIT_TRANSPORT
    except (DataError, FileNotFoundError, IsADirectoryError, UnicodeDecodeError) as exc:
        sys.stderr.write(f"hrvis: data error: {exc}\n")
        return EXIT_DATA


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
