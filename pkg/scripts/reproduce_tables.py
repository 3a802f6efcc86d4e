"""Recompute the bundled BeauVis and PREVis score tables from their item labels.

Prints every BeauVis cell with the recomputed and printed value, the
per-persona grand means and the BeauVis vs PREVis-Understand correlation.
No network access is involved.
"""

import sys
from pathlib import Path

from hrvis.evalharness import load_fixture, personas, scales, verify_tables
from hrvis.evalharness.administer import administer_all

ROOT = Path(__file__).resolve().parents[1]


def main() -> int:
    fixture = load_fixture(ROOT / "fixtures" / "appendixD.json")
    jobs = [(None, personas()[p], scales()[s], v) for (p, v, s) in fixture]
    report = verify_tables(administer_all(jobs, fixture=fixture))
    sys.stdout.write(report.to_markdown())
    return 0


if __name__ == "__main__":
    sys.exit(main())
