"""Deterministic SVG output for grids, clocks, matrices, spectrograms and scatters.

Documents are assembled as plain text with fixed number formatting, so equal
inputs always give equal bytes. Data marks carry a class attribute
(``cell``, ``pt``, ``band-boundary`` ...) so tests can count them.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from xml.sax.saxutils import escape

import numpy as np

from .circadian import DAY_NAMES, ClockPoints, WeekGrid
from .errors import UnknownPalette
from .poincare import Ellipse
from .spectral import Spectrogram

# Hex stop tables. The art-historical palettes are approximations: smooth
# ramps spanning a wide dark-to-light range.
PALETTES: dict[str, tuple[tuple[float, str], ...]] = {
    "twilight": (
        (0.0, "#1b1f3b"),
        (0.25, "#3d2c6b"),
        (0.5, "#8a3f7d"),
        (0.75, "#e0786b"),
        (1.0, "#fbe3a1"),
    ),
    "aurora_green": (
        (0.0, "#071a1f"),
        (0.3, "#0f4c4a"),
        (0.6, "#1f9e6e"),
        (0.85, "#7fe38f"),
        (1.0, "#e4ffd6"),
    ),
    "mona_lisa": (
        (0.0, "#1a120b"),
        (0.2, "#3b2a17"),
        (0.4, "#5e4a2a"),
        (0.6, "#8a7444"),
        (0.8, "#bba673"),
        (1.0, "#e8dcb5"),
    ),
    "van_gogh": (
        (0.0, "#0b1d4f"),
        (0.3, "#1f4e9c"),
        (0.55, "#4f8fc0"),
        (0.75, "#e3c23d"),
        (1.0, "#f7e98e"),
    ),
    "plasma_layers": (
        (0.0, "#0d0887"),
        (0.5, "#cc4778"),
        (1.0, "#f0f921"),
    ),
    "categorical10": (
        (0.0, "#1f77b4"),
        (1 / 9, "#ff7f0e"),
        (2 / 9, "#2ca02c"),
        (3 / 9, "#d62728"),
        (4 / 9, "#9467bd"),
        (5 / 9, "#8c564b"),
        (6 / 9, "#e377c2"),
        (7 / 9, "#7f7f7f"),
        (8 / 9, "#bcbd22"),
        (1.0, "#17becf"),
    ),
}

MISSING_FILL = "url(#hatch)"
FONT = 'font-family="sans-serif"'


@dataclass(frozen=True)
class RenderSpec:
    width_px: int = 900
    height_px: int = 420
    margin_left: int = 90
    margin_right: int = 110
    margin_top: int = 40
    margin_bottom: int = 50
    palette: str = "twilight"
    log_scale: bool = False
    title: str = ""
    x_label: str = ""
    y_label: str = ""

    def __post_init__(self):
        if self.width_px <= 0 or self.height_px <= 0:
            raise ValueError("dimensions must be positive")
        if self.plot_w <= 0 or self.plot_h <= 0:
            raise ValueError("margins leave no plotting area")

    @property
    def plot_w(self) -> int:
        return self.width_px - self.margin_left - self.margin_right

    @property
    def plot_h(self) -> int:
        return self.height_px - self.margin_top - self.margin_bottom


# --------------------------------------------------------------------------
# colour


def _rgb(hexcolor: str) -> tuple[int, int, int]:
    h = hexcolor.lstrip("#")
    return int(h[0:2], 16), int(h[2:4], 16), int(h[4:6], 16)


def colormap(palette, t: float) -> str:
    """Piecewise-linear sRGB interpolation between palette stops; t is clamped.

    ``palette`` is a name from :data:`PALETTES` or a sequence of
    ``(t, "#rrggbb")`` stops.
    """
    if isinstance(palette, str):
        try:
            stops = PALETTES[palette]
        except KeyError:
            raise UnknownPalette(palette) from None
    else:
        stops = tuple((float(a), c) for a, c in palette)
    if not math.isfinite(t):
        t = 0.0
    t = min(1.0, max(0.0, float(t)))
    if t <= stops[0][0]:
        return stops[0][1]
    for (t0, c0), (t1, c1) in zip(stops, stops[1:]):
        if t <= t1:
            if t == t1:
                return c1
            f = (t - t0) / (t1 - t0)
            rgb = [round(a + (b - a) * f) for a, b in zip(_rgb(c0), _rgb(c1))]
            return "#{:02x}{:02x}{:02x}".format(*rgb)
    return stops[-1][1]


def categorical(i: int) -> str:
    return PALETTES["categorical10"][i % 10][1]


def relative_luminance(hexcolor: str) -> float:
    def lin(c):
        c /= 255.0
        return c / 12.92 if c <= 0.04045 else ((c + 0.055) / 1.055) ** 2.4

    r, g, b = (lin(c) for c in _rgb(hexcolor))
    return 0.2126 * r + 0.7152 * g + 0.0722 * b


# --------------------------------------------------------------------------
# document helpers


def _f(v: float) -> str:
    s = f"{v:.2f}".rstrip("0").rstrip(".")
    return "0" if s in ("-0", "") else s


class _Doc:
    def __init__(self, spec: RenderSpec):
        self.spec = spec
        self.parts: list[str] = [
            '<?xml version="1.0" encoding="UTF-8"?>',
            f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
            f'width="{spec.width_px}" height="{spec.height_px}" '
            f'viewBox="0 0 {spec.width_px} {spec.height_px}">',
            "<defs>"
            '<pattern id="hatch" patternUnits="userSpaceOnUse" width="6" height="6">'
            '<rect width="6" height="6" fill="#d9d9d9"/>'
            '<path d="M0,6 L6,0" stroke="#8c8c8c" stroke-width="1"/>'
            "</pattern></defs>",
            f'<rect class="background" width="{spec.width_px}" height="{spec.height_px}" fill="#ffffff"/>',
        ]
        if spec.title:
            self.text(spec.width_px / 2, 24, spec.title, size=16, anchor="middle", cls="title")

    def add(self, s: str) -> None:
        self.parts.append(s)

    def text(self, x, y, s, size=11, anchor="start", cls="label", rotate=None, fill="#222222"):
        rot = f' transform="rotate({_f(rotate)} {_f(x)} {_f(y)})"' if rotate is not None else ""
        self.add(
            f'<text class="{cls}" x="{_f(x)}" y="{_f(y)}" font-size="{size}" {FONT} '
            f'text-anchor="{anchor}" fill="{fill}"{rot}>{escape(str(s))}</text>'
        )

    def axis_labels(self) -> None:
        s = self.spec
        if s.x_label:
            self.text(
                s.margin_left + s.plot_w / 2, s.height_px - 10, s.x_label, anchor="middle", cls="axis-title"
            )
        if s.y_label:
            x, y = 16, s.margin_top + s.plot_h / 2
            self.text(x, y, s.y_label, anchor="middle", cls="axis-title", rotate=-90)

    def legend(self, lo: float, hi: float, unit: str = "") -> None:
        s = self.spec
        x = s.width_px - s.margin_right + 30
        y0, h = s.margin_top, s.plot_h
        steps = 32
        for k in range(steps):
            t = 1.0 - (k + 0.5) / steps
            self.add(
                f'<rect class="legend-swatch" x="{x}" y="{_f(y0 + k * h / steps)}" width="14" '
                f'height="{_f(h / steps + 0.5)}" fill="{colormap(s.palette, t)}"/>'
            )
        self.text(x + 18, y0 + 8, f"max {_g(hi)}{unit}", size=10, cls="legend-label")
        self.text(x + 18, y0 + h, f"min {_g(lo)}{unit}", size=10, cls="legend-label")

    def close(self) -> str:
        self.add("</svg>")
        return "\n".join(self.parts) + "\n"


def _g(v: float) -> str:
    return f"{v:.4g}"


def _normalize(values: np.ndarray, log_scale: bool = False):
    v = np.asarray(values, dtype=float)
    if log_scale:
        v = np.log10(v + 1e-12)
    finite = v[np.isfinite(v)]
    if finite.size == 0:
        return v, 0.0, 0.0
    lo, hi = float(finite.min()), float(finite.max())
    t = np.full_like(v, 0.5) if hi == lo else (v - lo) / (hi - lo)
    return t, lo, hi


# --------------------------------------------------------------------------
# week grid


def render_grid(grid: WeekGrid, spec: RenderSpec = RenderSpec()) -> str:
    doc = _Doc(spec)
    t, lo, hi = _normalize(grid.values, spec.log_scale)
    cw, ch = spec.plot_w / 24, spec.plot_h / 7
    for d in range(7):
        for h in range(24):
            x = spec.margin_left + h * cw
            y = spec.margin_top + d * ch
            if np.isnan(grid.values[d, h]):
                fill, cls = MISSING_FILL, "cell missing"
            else:
                fill, cls = colormap(spec.palette, t[d, h]), "cell"
            doc.add(
                f'<rect class="{cls}" x="{_f(x)}" y="{_f(y)}" width="{_f(cw - 1)}" '
                f'height="{_f(ch - 1)}" fill="{fill}"/>'
            )
        doc.text(spec.margin_left - 6, spec.margin_top + (d + 0.6) * ch, DAY_NAMES[d][:3], anchor="end")
    for h in range(0, 24, 3):
        doc.text(spec.margin_left + (h + 0.5) * cw, spec.margin_top + spec.plot_h + 14, f"{h:02d}", anchor="middle")
    unit = " bpm" if grid.metric == "mean_bpm" else " ms"
    doc.legend(lo, hi, unit)
    doc.axis_labels()
    return doc.close()


# --------------------------------------------------------------------------
# clock


def render_clock(clocks, spec: RenderSpec = RenderSpec(width_px=520, height_px=520, margin_left=40, margin_right=40)) -> str:
    """One or more days on a 24-hour dial; midnight at the top, clockwise."""
    if isinstance(clocks, ClockPoints):
        clocks = [clocks]
    doc = _Doc(spec)
    cx = spec.margin_left + spec.plot_w / 2
    cy = spec.margin_top + spec.plot_h / 2
    radius = min(spec.plot_w, spec.plot_h) / 2
    inner = radius * 0.25
    doc.add(f'<circle class="dial" cx="{_f(cx)}" cy="{_f(cy)}" r="{_f(radius)}" fill="none" stroke="#bbbbbb"/>')
    for h in range(0, 24, 3):
        a = 2 * math.pi * h / 24
        doc.text(cx + (radius + 14) * math.sin(a), cy - (radius + 14) * math.cos(a) + 4, f"{h:02d}", anchor="middle")
    for k, day in enumerate(clocks):
        color = categorical(k) if len(clocks) > 1 else colormap(spec.palette, 0.6)
        r = inner + day.radii * (radius - inner)
        xs = cx + r * np.sin(day.angles)
        ys = cy - r * np.cos(day.angles)
        for x, y in zip(xs, ys):
            doc.add(f'<circle class="pt" cx="{_f(x)}" cy="{_f(y)}" r="1.2" fill="{color}" fill-opacity="0.5"/>')
        doc.text(spec.margin_left, spec.height_px - 8 - 14 * (len(clocks) - 1 - k), day.day_label, fill=color, cls="day-label")
    return doc.close()


# --------------------------------------------------------------------------
# recurrence / distance matrix


def pool_matrix(m: np.ndarray, size: int) -> np.ndarray:
    """Block-average a square matrix down to at most ``size`` x ``size``."""
    m = np.asarray(m, dtype=float)
    n = m.shape[0]
    if n <= size:
        return m
    edges = np.linspace(0, n, size + 1).round().astype(int)
    rows = np.add.reduceat(m, edges[:-1], axis=0)
    blocks = np.add.reduceat(rows, edges[:-1], axis=1)
    widths = np.diff(edges)
    return blocks / np.outer(widths, widths)


def render_matrix(matrix, spec: RenderSpec = RenderSpec(width_px=560, height_px=560, palette="mona_lisa", margin_right=110), display_size: int = 256, binary: bool | None = None) -> str:
    """Recurrence bits or a distance grid as a square heatmap.

    Recurrent (or near) cells are dark: binary input maps True to 0 and
    False to 1; graded input maps distance through the palette. Matrices
    larger than ``display_size`` are block-averaged first.
    """
    m = np.asarray(getattr(matrix, "bits", matrix))
    if binary is None:
        binary = m.dtype == bool
    values = pool_matrix((~m).astype(float) if binary else m, display_size)
    t, lo, hi = _normalize(values, spec.log_scale)
    if binary:
        t = values
    doc = _Doc(spec)
    side = min(spec.plot_w, spec.plot_h)
    k = values.shape[0]
    cell = side / k
    for i in range(k):
        y = spec.margin_top + side - (i + 1) * cell
        for j in range(k):
            x = spec.margin_left + j * cell
            doc.add(
                f'<rect class="cell" x="{_f(x)}" y="{_f(y)}" width="{_f(cell + 0.3)}" '
                f'height="{_f(cell + 0.3)}" fill="{colormap(spec.palette, t[i, j])}"/>'
            )
    if binary:
        doc.legend(0.0, 1.0)
    else:
        doc.legend(lo, hi, " ms")
    doc.axis_labels()
    return doc.close()


# --------------------------------------------------------------------------
# spectrogram


def render_spectrogram(spec_data: Spectrogram, spec: RenderSpec = RenderSpec(palette="van_gogh", log_scale=True), max_freq_hz: float = 0.5) -> str:
    """Time x frequency heatmap of log10 power with VLF/LF/HF annotations."""
    keep = spec_data.freqs <= max_freq_hz + 1e-12
    freqs = spec_data.freqs[keep]
    power = spec_data.power[:, keep]
    t, lo, hi = _normalize(power, log_scale=spec.log_scale)
    n_t, n_f = power.shape
    doc = _Doc(spec)
    cw = spec.plot_w / n_t
    fmax = float(freqs[-1]) if freqs.size else max_freq_hz
    df = float(freqs[1] - freqs[0]) if freqs.size > 1 else fmax

    def fy(f: float) -> float:
        return spec.margin_top + spec.plot_h * (1.0 - f / (fmax + df / 2))

    for i in range(n_t):
        x = spec.margin_left + i * cw
        for j in range(n_f):
            y_top = fy(freqs[j] + df / 2)
            y_bot = fy(max(freqs[j] - df / 2, 0.0))
            doc.add(
                f'<rect class="cell" x="{_f(x)}" y="{_f(y_top)}" width="{_f(cw + 0.3)}" '
                f'height="{_f(y_bot - y_top + 0.3)}" fill="{colormap(spec.palette, t[i, j])}"/>'
            )
    bands = spec_data.bands
    x0, x1 = spec.margin_left, spec.margin_left + spec.plot_w
    for edge in (bands.vlf[1], bands.lf[1]):
        y = fy(edge)
        doc.add(
            f'<line class="band-boundary" x1="{_f(x0)}" y1="{_f(y)}" x2="{_f(x1)}" y2="{_f(y)}" '
            f'stroke="#ffffff" stroke-width="1.5" stroke-dasharray="6 3"/>'
        )
    for name, (lo_f, hi_f) in bands.items():
        mid = (lo_f + min(hi_f, fmax)) / 2
        doc.text(x1 + 4, fy(mid) + 4, name.upper(), size=11, cls="band-label")
    # time ticks every day
    t0 = float(spec_data.window_starts[0]) if n_t else 0.0
    span = float(spec_data.window_starts[-1] - t0) + spec_data.step_s if n_t else 1.0
    day = 0
    while day * 86400.0 <= span:
        x = x0 + spec.plot_w * day * 86400.0 / span
        doc.text(x, spec.margin_top + spec.plot_h + 14, f"d{day}", anchor="middle")
        day += 1
    for f in np.arange(0.0, fmax + 1e-9, 0.1):
        doc.text(x0 - 6, fy(f) + 4, f"{f:.1f}", anchor="end")
    doc.legend(lo, hi, " log10 ms²/Hz" if spec.log_scale else " ms²/Hz")
    doc.axis_labels()
    return doc.close()


# --------------------------------------------------------------------------
# scatter


def density_levels(x: np.ndarray, y: np.ndarray, bins: int = 40) -> np.ndarray:
    """Three density levels (0, 1, 2) from point counts in a fixed 2-D histogram."""
    if x.size == 0:
        return np.zeros(0, dtype=int)
    span_x = (x.min(), x.max() if x.max() > x.min() else x.min() + 1.0)
    span_y = (y.min(), y.max() if y.max() > y.min() else y.min() + 1.0)
    hist, ex, ey = np.histogram2d(x, y, bins=bins, range=(span_x, span_y))
    ix = np.clip(np.searchsorted(ex, x, side="right") - 1, 0, bins - 1)
    iy = np.clip(np.searchsorted(ey, y, side="right") - 1, 0, bins - 1)
    local = hist[ix, iy]
    occupied = hist[hist > 0]
    q1, q2 = np.quantile(occupied, [1 / 3, 2 / 3])
    return (local > q1).astype(int) + (local > q2).astype(int)


def render_scatter(
    points: np.ndarray,
    spec: RenderSpec = RenderSpec(width_px=560, height_px=520, palette="plasma_layers"),
    labels=None,
    categorical_labels: bool = True,
    ellipse: Ellipse | None = None,
    identity_line: bool = False,
    density: bool = False,
    legend_names: dict | None = None,
) -> str:
    """2-D scatter (3-D input is shown via its first two coordinates).

    ``labels`` colour points categorically or, with
    ``categorical_labels=False``, through the palette. ``density`` layers
    points in three alpha levels. ``identity_line`` and ``ellipse`` add the
    Poincaré overlays; a degenerate Poincaré cloud (``identity_line`` with a
    single distinct point) gets a centroid cross instead of an ellipse.
    """
    pts = np.asarray(points, dtype=float)
    x, y = pts[:, 0], pts[:, 1]
    doc = _Doc(spec)
    if identity_line:
        lo = float(min(x.min(), y.min()))
        hi = float(max(x.max(), y.max()))
        pad = max((hi - lo) * 0.05, 1.0)
        xlo = ylo = lo - pad
        xhi = yhi = hi + pad
        if ellipse is not None:
            r = max(ellipse.a_identity, ellipse.b_perp)
            xlo = ylo = min(xlo, ellipse.cx - r, ellipse.cy - r)
            xhi = yhi = max(xhi, ellipse.cx + r, ellipse.cy + r)
    else:
        pad_x = max((x.max() - x.min()) * 0.05, 1e-9)
        pad_y = max((y.max() - y.min()) * 0.05, 1e-9)
        xlo, xhi = x.min() - pad_x, x.max() + pad_x
        ylo, yhi = y.min() - pad_y, y.max() + pad_y

    def sx(v):
        return spec.margin_left + (v - xlo) / (xhi - xlo) * spec.plot_w

    def sy(v):
        return spec.margin_top + spec.plot_h - (v - ylo) / (yhi - ylo) * spec.plot_h

    doc.add(
        f'<rect class="frame" x="{spec.margin_left}" y="{spec.margin_top}" width="{spec.plot_w}" '
        f'height="{spec.plot_h}" fill="none" stroke="#999999"/>'
    )
    if identity_line:
        doc.add(
            f'<line class="identity" x1="{_f(sx(xlo))}" y1="{_f(sy(ylo))}" x2="{_f(sx(xhi))}" '
            f'y2="{_f(sy(yhi))}" stroke="#555555" stroke-dasharray="4 3"/>'
        )

    if labels is not None:
        labels = np.asarray(labels)
        if categorical_labels:
            keys = sorted(set(labels.tolist()))
            colors = [categorical(keys.index(v)) for v in labels.tolist()]
        else:
            t, _, _ = _normalize(labels.astype(float))
            colors = [colormap(spec.palette, v) for v in t]
        alphas = [0.75] * x.size
    elif density:
        levels = density_levels(x, y)
        layer_colors = [colormap(spec.palette, v) for v in (0.15, 0.55, 0.95)]
        layer_alpha = (0.25, 0.5, 0.9)
        order = np.argsort(levels, kind="stable")
        x, y, levels = x[order], y[order], levels[order]
        colors = [layer_colors[v] for v in levels]
        alphas = [layer_alpha[v] for v in levels]
    else:
        colors = [colormap(spec.palette, 0.5)] * x.size
        alphas = [0.75] * x.size

    for xi, yi, c, a in zip(x, y, colors, alphas):
        doc.add(f'<circle class="pt" cx="{_f(sx(xi))}" cy="{_f(sy(yi))}" r="1.8" fill="{c}" fill-opacity="{a}"/>')

    if ellipse is not None:
        ex, ey = sx(ellipse.cx), sy(ellipse.cy)
        rx = ellipse.a_identity / (xhi - xlo) * spec.plot_w
        ry = ellipse.b_perp / (yhi - ylo) * spec.plot_h
        doc.add(
            f'<ellipse class="confidence" cx="{_f(ex)}" cy="{_f(ey)}" rx="{_f(rx)}" ry="{_f(ry)}" '
            f'transform="rotate(-{_f(ellipse.rot_deg)} {_f(ex)} {_f(ey)})" fill="none" '
            f'stroke="#111111" stroke-width="1.5"/>'
        )
    elif identity_line:
        cx, cy = sx(float(np.mean(x))), sy(float(np.mean(y)))
        doc.add(
            f'<path class="centroid" d="M{_f(cx - 6)},{_f(cy)} L{_f(cx + 6)},{_f(cy)} '
            f'M{_f(cx)},{_f(cy - 6)} L{_f(cx)},{_f(cy + 6)}" stroke="#111111" stroke-width="1.5"/>'
        )

    for v in np.linspace(xlo, xhi, 5)[1:-1]:
        doc.text(sx(v), spec.margin_top + spec.plot_h + 14, _g(v), anchor="middle", size=10)
    for v in np.linspace(ylo, yhi, 5)[1:-1]:
        doc.text(spec.margin_left - 4, sy(v) + 4, _g(v), anchor="end", size=10)
    if legend_names:
        for k, (key, name) in enumerate(sorted(legend_names.items())):
            doc.text(spec.width_px - spec.margin_right + 8, spec.margin_top + 12 + 14 * k, name, fill=categorical(k), size=10, cls="legend-label")
    doc.axis_labels()
    return doc.close()


def with_title(spec: RenderSpec, title: str, x_label: str = "", y_label: str = "") -> RenderSpec:
    return replace(spec, title=title, x_label=x_label, y_label=y_label)
