"""Run the full analysis pipeline on a synthetic week and list the artifacts.

    python scripts/run_pipeline.py --out runs/week42 --seed 42
"""

import argparse
import json
import sys
import time
from pathlib import Path

from hrvis.cli import run

ROOT = Path(__file__).resolve().parents[1]


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", type=Path, default=Path("runs/pipeline"))
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--days", type=int, default=7)
    ap.add_argument("--no-eval", action="store_true", help="skip the offline score verification")
    args = ap.parse_args()

    argv = ["pipeline", "--seed", str(args.seed), "--days", str(args.days), "--out", str(args.out)]
    if not args.no_eval:
        argv += ["--offline", str(ROOT / "fixtures" / "appendixD.json")]
    t0 = time.perf_counter()
    code = run(argv)
    if code:
        return code
    manifest = json.loads((args.out / "manifest.json").read_text())
    for name, digest in sorted(manifest["outputs"].items()):
        print(f"{digest[:12]}  {name}")
    print(f"{len(manifest['outputs'])} artifacts in {time.perf_counter() - t0:.1f}s -> {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
