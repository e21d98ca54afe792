"""Run every CLI experiment for both shipped configs into one output tree.

    python scripts/reproduce.py --out results/ [--trials N] [--workers N]
"""

import argparse
import sys
from pathlib import Path

from msprcapon.cli import main as cli

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--trials", type=int)
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    extra = ["--workers", str(args.workers)]
    if args.trials is not None:
        extra += ["--trials", str(args.trials)]
    for name in ("paper_fig1", "paper_fig2"):
        cfg = str(CONFIGS / f"{name}.yaml")
        for cmd in ("simulate", "pattern", "sweep-gamma"):
            out = Path(args.out) / name / cmd
            print(f"[{name}] {cmd} -> {out}")
            code = cli([cmd, "--config", cfg, "--out", str(out), *extra])
            if code:
                return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
