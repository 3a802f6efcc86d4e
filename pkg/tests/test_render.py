import os
import re
import xml.etree.ElementTree as ET
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hrvis.circadian import ClockPoints, WeekGrid
from hrvis.errors import UnknownPalette
from hrvis.poincare import confidence_ellipse, poincare_pairs
from hrvis.render import (
    PALETTES,
    RenderSpec,
    colormap,
    pool_matrix,
    relative_luminance,
    render_clock,
    render_grid,
    render_matrix,
    render_scatter,
    render_spectrogram,
)
from hrvis.spectral import Spectrogram

GOLDEN = Path(__file__).parent / "golden"
SVG = "{http://www.w3.org/2000/svg}"


def check_golden(name: str, text: str) -> None:
    path = GOLDEN / name
    if os.environ.get("UPDATE_GOLDEN"):
        path.write_text(text, encoding="utf-8")
    if not path.exists():
        pytest.fail(f"missing golden {name}; regenerate with scripts/make_golden.py")
    assert path.read_text(encoding="utf-8") == text


def elements(svg: str, cls: str):
    root = ET.fromstring(svg.encode("utf-8"))
    return [e for e in root.iter() if cls in (e.get("class") or "").split()]


def fixture_grid():
    v = 60 + 10 * np.sin(np.arange(168) / 168 * 2 * np.pi * 7).reshape(7, 24)
    v[2, 5] = np.nan
    counts = np.where(np.isnan(v), 0, 100)
    return WeekGrid("mean_bpm", v, counts)


def fixture_spectrogram():
    freqs = np.arange(0, 2.0 + 1e-9, 1 / 75)
    starts = 1_700_000_000 + 30.0 * np.arange(12)
    power = np.exp(-((freqs[None, :] - 0.25) ** 2) / 0.001) * (1 + np.arange(12)[:, None]) + 1.0
    return Spectrogram(starts, freqs, power, 4.0, 300.0, 30.0)


def test_colormap_endpoints_and_midpoint():
    for name, stops in PALETTES.items():
        assert colormap(name, 0.0) == stops[0][1]
        assert colormap(name, 1.0) == stops[-1][1]
        assert colormap(name, -3) == stops[0][1] and colormap(name, 7) == stops[-1][1]
    stops = [(0.0, "#ffffff"), (0.2, "#000000"), (0.4, "#204060"), (1.0, "#ffffff")]
    assert colormap(stops, 0.3) == "#102030"
    with pytest.raises(UnknownPalette):
        colormap("sepia", 0.5)


def test_palette_tables_valid():
    for stops in PALETTES.values():
        ts = [t for t, _ in stops]
        assert ts[0] == 0.0 and ts[-1] == 1.0
        assert all(a < b for a, b in zip(ts, ts[1:]))


@given(st.floats(0, 1), st.floats(0, 1))
def test_mona_lisa_lighter_with_t(a, b):
    lo, hi = sorted((a, b))
    assert relative_luminance(colormap("mona_lisa", lo)) <= relative_luminance(colormap("mona_lisa", hi)) + 1e-12


def test_grid_constant_and_missing():
    svg = render_grid(WeekGrid("mean_bpm", np.full((7, 24), 70.0), np.ones((7, 24))))
    cells = elements(svg, "cell")
    assert len(cells) == 168 and len({c.get("fill") for c in cells}) == 1
    svg = render_grid(fixture_grid())
    assert len(elements(svg, "cell")) == 168
    missing = elements(svg, "missing")
    assert len(missing) == 1 and missing[0].get("fill") == "url(#hatch)"
    assert "min " in svg and "max " in svg


def test_grid_golden():
    check_golden("grid.svg", render_grid(fixture_grid(), RenderSpec(title="Mean heart rate")))


def test_clock_points_once_each():
    r = np.random.default_rng(0)
    days = [
        ClockPoints(f"day {k}", r.uniform(0, 2 * np.pi, 50), r.uniform(0, 1, 50), r.uniform(600, 1000, 50))
        for k in range(2)
    ]
    svg = render_clock(days)
    assert len(elements(svg, "pt")) == 100
    check_golden("clock.svg", svg)


def test_matrix_binary_and_graded():
    bits = np.eye(16, dtype=bool) | np.eye(16, k=1, dtype=bool) | np.eye(16, k=-1, dtype=bool)
    svg = render_matrix(bits)
    cells = elements(svg, "cell")
    assert len(cells) == 256
    # recurrent cells are the dark end of the palette
    fills = {c.get("fill") for c in cells}
    assert fills == {colormap("mona_lisa", 0.0), colormap("mona_lisa", 1.0)}
    check_golden("recurrence.svg", svg)
    graded = render_matrix(np.abs(np.subtract.outer(np.arange(12.0), np.arange(12.0))))
    assert len(elements(graded, "cell")) == 144
    check_golden("recurrence_graded.svg", graded)


def test_pool_matrix():
    m = np.arange(16.0).reshape(4, 4)
    np.testing.assert_array_equal(pool_matrix(m, 4), m)
    np.testing.assert_array_equal(pool_matrix(m, 2), [[2.5, 4.5], [10.5, 12.5]])


def test_spectrogram_annotations():
    sg = fixture_spectrogram()
    svg = render_spectrogram(sg)
    assert len(elements(svg, "band-boundary")) == 2
    labels = [e.text for e in elements(svg, "band-label")]
    assert labels == ["VLF", "LF", "HF"]
    n_f = int(np.sum(sg.freqs <= 0.5 + 1e-12))
    assert len(elements(svg, "cell")) == 12 * n_f
    check_golden("spectrogram.svg", svg)


def test_scatter_every_point_once():
    r = np.random.default_rng(1)
    pts = r.normal(size=(300, 2))
    for kwargs in ({}, {"labels": r.integers(0, 3, 300)}, {"density": True}):
        assert len(elements(render_scatter(pts, **kwargs), "pt")) == 300
    check_golden("tsne.svg", render_scatter(pts, labels=np.arange(300) % 2, legend_names={0: "weekday", 1: "weekend"}))


def test_poincare_overlay_and_degenerate():
    r = np.random.default_rng(2)
    rr = 900 + np.cumsum(r.normal(0, 5, 200))
    pairs = poincare_pairs(rr)
    pts = np.column_stack([pairs.x, pairs.y])
    svg = render_scatter(pts, ellipse=confidence_ellipse(pairs), identity_line=True, density=True)
    assert len(elements(svg, "identity")) == 1 and len(elements(svg, "confidence")) == 1
    assert len(elements(svg, "pt")) == 199
    check_golden("poincare.svg", svg)

    flat = poincare_pairs(np.full(50, 800.0))
    svg = render_scatter(np.column_stack([flat.x, flat.y]), identity_line=True)
    pts = elements(svg, "pt")
    assert len(pts) == 49 and len({(p.get("cx"), p.get("cy")) for p in pts}) == 1
    assert not elements(svg, "confidence") and len(elements(svg, "centroid")) == 1


def test_determinism_and_header():
    a = render_grid(fixture_grid())
    assert a == render_grid(fixture_grid())
    root = ET.fromstring(a.encode())
    assert root.get("viewBox") == "0 0 900 420" and root.get("version") == "1.1"
    assert re.search(r"font-family=\"sans-serif\"", a)


def test_spec_validation():
    with pytest.raises(ValueError):
        RenderSpec(width_px=0)
    with pytest.raises(ValueError):
        RenderSpec(width_px=100, margin_left=60, margin_right=60)
