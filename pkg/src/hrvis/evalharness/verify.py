"""Recompute aggregates from item labels and compare them with printed tables."""

from __future__ import annotations

import json
import statistics
from dataclasses import dataclass, field
from fractions import Fraction

from ..errors import IncompleteCoverage
from .administer import ScaleResponse
from .instruments import (
    VISUALIZATIONS,
    personas,
    printed_tables,
    round_half_away,
    scales,
    score_scale,
)

CORRELATION_VARIANT = "BeauVis (recomputed) vs PREVis Understand, per persona x visualization cell"


@dataclass(frozen=True)
class CellCheck:
    persona: str
    visualization: str
    scale: str
    subscale: str
    computed: float | None
    printed: float | None

    @property
    def match(self) -> bool:
        return self.computed == self.printed

    @property
    def status(self) -> str:
        return "MATCH" if self.match else "MISMATCH"


@dataclass
class VerificationReport:
    cells: list[CellCheck]
    grand_means: dict[str, dict[str, float | None]]
    correlation: float | None
    correlation_n: int
    correlation_variant: str = CORRELATION_VARIANT
    notes: list[str] = field(default_factory=list)

    @property
    def mismatches(self) -> list[CellCheck]:
        return [c for c in self.cells if not c.match]

    @property
    def n_match(self) -> int:
        return sum(c.match for c in self.cells)

    def to_json(self) -> dict:
        return {
            "cells": [
                {
                    "persona": c.persona,
                    "visualization": c.visualization,
                    "scale": c.scale,
                    "subscale": c.subscale,
                    "computed": c.computed,
                    "printed": c.printed,
                    "status": c.status,
                }
                for c in self.cells
            ],
            "summary": {
                "cells": len(self.cells),
                "match": self.n_match,
                "mismatch": len(self.mismatches),
            },
            "grand_means": self.grand_means,
            "correlation": {
                "variant": self.correlation_variant,
                "pearson_r": self.correlation,
                "n": self.correlation_n,
            },
            "notes": self.notes,
        }

    def to_markdown(self) -> str:
        names = {p.id: p.name for p in personas().values()}
        lines = [
            "# Score table verification",
            "",
            f"{self.n_match} of {len(self.cells)} cells match; {len(self.mismatches)} mismatch.",
            "",
            "| Persona | Visualization | Scale | Subscale | Computed | Printed | Status |",
            "|---|---|---|---|---|---|---|",
        ]
        for c in self.cells:
            lines.append(
                f"| {names.get(c.persona, c.persona)} | {c.visualization} | {c.scale} | {c.subscale} "
                f"| {_fmt(c.computed)} | {_fmt(c.printed)} | {c.status} |"
            )
        lines += ["", "## Per-persona grand means", "", "| Persona | Computed | Printed |", "|---|---|---|"]
        for pid, gm in self.grand_means.items():
            lines.append(
                f"| {names.get(pid, pid)} | {_fmt(gm['computed'], 2)} | {_fmt(gm['printed'], 2)} |"
            )
        r = "n/a" if self.correlation is None else f"{self.correlation:.3f}"
        lines += ["", "## Correlation", "", f"Pearson r = {r} over {self.correlation_n} cells ({self.correlation_variant})."]
        if self.notes:
            lines += [""] + [f"- {n}" for n in self.notes]
        return "\n".join(lines) + "\n"

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"


def _fmt(v, digits: int = 1) -> str:
    return "N/A" if v is None else f"{v:.{digits}f}"


def pearson(a, b) -> float:
    """Sample Pearson correlation; raises ValueError when either series is constant."""
    return statistics.correlation([float(x) for x in a], [float(y) for y in b])


def _order_key(persona: str, vis: str):
    ids = list(personas())
    p = ids.index(persona) if persona in ids else len(ids)
    v = VISUALIZATIONS.index(vis) if vis in VISUALIZATIONS else len(VISUALIZATIONS)
    return (v, p, persona, vis)


def verify_tables(responses: list[ScaleResponse], printed: dict | None = None) -> VerificationReport:
    """Compare aggregates recomputed from each response's labels with the printed cells.

    Every printed cell of a scale that appears among ``responses`` must be
    covered, otherwise :class:`IncompleteCoverage` is raised.
    """
    printed = printed_tables() if printed is None else printed
    if not responses:
        raise IncompleteCoverage("no responses to verify")
    by_key = {(r.persona, r.visualization, r.scale): r for r in responses}
    present = {r.scale for r in responses}
    all_scales = scales()
    cells: list[CellCheck] = []
    notes: list[str] = []

    beauvis_scores: dict[tuple[str, str], float | None] = {}
    if "beauvis" in present:
        rows = sorted(printed["beauvis"], key=lambda r: _order_key(r["persona"], r["visualization"]))
        for row in rows:
            key = (row["persona"], row["visualization"], "beauvis")
            if key not in by_key:
                raise IncompleteCoverage(f"no response for {key}")
            # recompute from labels, never trust a stored aggregate
            agg = _recompute(by_key[key], all_scales["beauvis"])["BeauVis"].value
            beauvis_scores[key[:2]] = agg
            cells.append(CellCheck(key[0], key[1], "beauvis", "BeauVis", agg, row["printed_score"]))

    understand: dict[tuple[str, str], float | None] = {}
    previs_rows = sorted(printed["previs_subscales"], key=lambda r: _order_key(r["persona"], r["visualization"]))
    for row in previs_rows:
        understand[(row["persona"], row["visualization"])] = row["Understand"]["value"]
    if "previs" in present:
        for row in previs_rows:
            key = (row["persona"], row["visualization"], "previs")
            if key not in by_key:
                raise IncompleteCoverage(f"no response for {key}")
            agg = _recompute(by_key[key], all_scales["previs"])
            for name in all_scales["previs"].subscales:
                cells.append(
                    CellCheck(key[0], key[1], "previs", name, agg[name].value, row[name]["value"])
                )
            understand[key[:2]] = agg["Understand"].value
    else:
        notes.append("PREVis Understand values are taken from the printed subscale table.")

    grand: dict[str, dict[str, float | None]] = {}
    if beauvis_scores:
        printed_by_cell = {(r["persona"], r["visualization"]): r["printed_score"] for r in printed["beauvis"]}
        for pid in personas():
            comp = [v for (p, _), v in beauvis_scores.items() if p == pid and v is not None]
            prin = [v for (p, _), v in printed_by_cell.items() if p == pid and v is not None]
            grand[pid] = {
                "computed": _mean2(comp),
                "printed": _mean2(prin),
            }

    pairs = [
        (beauvis_scores[k], understand[k])
        for k in beauvis_scores
        if k in understand and beauvis_scores[k] is not None and understand[k] is not None
    ]
    r = None
    if len(pairs) >= 2:
        try:
            r = pearson(*zip(*pairs))
        except statistics.StatisticsError:
            notes.append("correlation undefined: a score series is constant")
    return VerificationReport(cells, grand, r, len(pairs), notes=notes)


def _recompute(response: ScaleResponse, scale):
    return score_scale(response.answers, scale)


def _mean2(values) -> float | None:
    if not values:
        return None
    frac = sum((Fraction(str(v)) for v in values), Fraction(0)) / len(values)
    return round_half_away(frac, 2)
