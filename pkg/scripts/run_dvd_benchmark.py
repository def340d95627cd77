#!/usr/bin/env python3
"""Reproduce the cavity benchmark: steady Nu at paper-like density, the
three-discretization comparison, and phase timings.

Runs take minutes each at h = 0.01; pass --coarse for a quick look.
"""

import argparse
import time

from hybridnodes.bench import run_case
from hybridnodes.config import CaseConfig


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--h", type=float, default=0.01)
    parser.add_argument("--coarse", action="store_true", help="use h = 0.02")
    parser.add_argument("--out", default="out/dvd_benchmark")
    parser.add_argument("--seed", type=int, default=2)
    args = parser.parse_args()

    h = 0.02 if args.coarse else args.h
    for disc in ("hybrid", "pure-scattered", "pure-regular"):
        config = CaseConfig(case="dvd", h_r=h, t_end=0.15, rng_seed=args.seed,
                            discretization=disc, steady_tol=0.0,
                            out_dir=f"{args.out}/{disc}")
        t0 = time.perf_counter()
        result = run_case(config)
        print(f"{disc:15s} N={result.n_total:6d}  Nu={result.final_nu:.4f}  "
              f"total={time.perf_counter() - t0:7.1f}s  "
              f"(weights {result.timings.get('weights', float('nan')):.2f}s, "
              f"stepping {result.timings.get('stepping', float('nan')):.1f}s)")


if __name__ == "__main__":
    main()
