#!/usr/bin/env python3
"""Sweep the total offered load of a config and tabulate waiting-time
means and standard deviations per queue.

Example:
    python scripts/load_sweep.py configs/katayama.json \
        --rho-grid 0.05:0.95:19 --out sweep.csv
"""

import argparse
import csv
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from roving.analysis import report
from roving.cli import load_config
from roving.model import solve_traffic


def parse_grid(spec):
    lo, hi, count = spec.split(":")
    lo, hi, count = float(lo), float(hi), int(count)
    if count < 2:
        return [lo]
    step = (hi - lo) / (count - 1)
    return [lo + k * step for k in range(count)]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("config")
    ap.add_argument("--rho-grid", default="0.05:0.95:19")
    ap.add_argument("--jet-order", type=int, default=4)
    ap.add_argument("--out", default="sweep.csv")
    args = ap.parse_args()

    rows = []
    for rho in parse_grid(args.rho_grid):
        model = load_config(args.config, rho_target=rho)
        traffic = solve_traffic(model)
        rep = report(model, traffic=traffic, jet_order=args.jet_order, little_check=False)
        for qr in rep.queues:
            if qr.arbitrary is None:
                continue
            rows.append([rho, qr.queue, qr.arbitrary.mean, qr.arbitrary.sd])
        print(f"rho={rho:.3f}  " + "  ".join(
            f"Q{qr.queue}: E[W]={qr.arbitrary.mean:.4f} sd={qr.arbitrary.sd:.4f}"
            for qr in rep.queues if qr.arbitrary is not None))

    with open(args.out, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rho", "queue", "wait_mean", "wait_sd"])
        writer.writerows(rows)
    print(f"wrote {args.out}")


if __name__ == "__main__":
    main()
