"""Regenerate the frozen SVG goldens used by tests/test_render.py.

Only run this after an intentional rendering change, then review the diff
of tests/golden/ before committing.
"""

import os
import subprocess
import sys
from pathlib import Path

ROOT = Path(__file__).resolve().parents[1]


def main() -> int:
    env = dict(os.environ, UPDATE_GOLDEN="1")
    cmd = [sys.executable, "-m", "pytest", "-q", str(ROOT / "tests" / "test_render.py")]
    return subprocess.call(cmd, env=env, cwd=ROOT)


if __name__ == "__main__":
    sys.exit(main())
