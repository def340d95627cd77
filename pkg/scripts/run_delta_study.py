#!/usr/bin/env python3
"""Scattered-layer width sensitivity on the obstacle case: steady Nu as
delta_h grows, plus the split-cavity variant sweeping the layer across the
unit box."""

import argparse

from hybridnodes.bench import sweep
from hybridnodes.config import CaseConfig


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--case", choices=("obstacles2d", "dvd-split"), default="obstacles2d")
    parser.add_argument("--h", type=float, default=0.02)
    parser.add_argument("--t-end", type=float, default=0.1)
    parser.add_argument("--values", default="4,8,16")
    parser.add_argument("--out", default="out/delta_study")
    args = parser.parse_args()

    config = CaseConfig(case=args.case, h_r=args.h, t_end=args.t_end,
                        steady_tol=0.0, out_dir=args.out)
    values = [float(v) for v in args.values.split(",")]
    results = sweep(config, "delta_h", values)
    nus = [r.final_nu for r in results if r.status == "ok"]
    for value, result in zip(values, results):
        print(f"delta_h={value:g}: N={result.n_total} Nu={result.final_nu:.4f} [{result.status}]")
    if len(nus) >= 2:
        spread = (max(nus) - min(nus)) / abs(max(nus))
        print(f"relative Nu spread: {100 * spread:.2f}%")


if __name__ == "__main__":
    main()
