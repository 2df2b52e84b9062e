#!/usr/bin/env python3
"""Tabulate the first three waiting-time moments of the two-stage feedback
model (waiting room + service room with overhead batch) against its known
closed forms, for a range of overhead batch sizes.

Example:
    python scripts/feedback_moments_table.py --batches 1 2 3 5
"""

import argparse
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from roving.analysis import report
from roving.cli import load_config
from roving.model import solve_traffic

CONFIG = Path(__file__).resolve().parent.parent / "configs" / "takacs.json"


def closed_forms(m, mu=1.0):
    w1 = ((1 + m) / (2 * mu),
          (m + 1) * (11 * m + 25) / (27 * mu**2),
          (m + 1) * (m * (43 * m + 223) + 310) / (108 * mu**3))
    w2 = ((1 + 7 * m) / (6 * mu),
          (m + 1) * (37 * m + 11) / (27 * mu**2),
          (m + 1) * (m + 2) * (175 * m + 81) / (108 * mu**3))
    return w1, w2


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--batches", type=int, nargs="+", default=[1, 2, 3, 5])
    args = ap.parse_args()

    print(f"{'M':>3} {'queue':>6} {'moment':>7} {'computed':>18} {'closed form':>18} {'rel err':>10}")
    for m in args.batches:
        model = load_config(str(CONFIG), overrides=[f"M={m}"])
        rep = report(model, traffic=solve_traffic(model), little_check=False)
        expected = closed_forms(m)
        for q in (0, 1):
            got = rep.queues[q].arbitrary.raw
            for k in range(3):
                want = expected[q][k]
                rel = abs(got[k] - want) / abs(want)
                print(f"{m:>3} {q:>6} {k + 1:>7} {got[k]:>18.12f} {want:>18.12f} {rel:>10.2e}")


if __name__ == "__main__":
    main()
