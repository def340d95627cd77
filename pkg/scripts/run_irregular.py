#!/usr/bin/env python3
"""Irregular-domain cases: star-shaped obstacles in 2D or spheres in 3D,
hybrid vs fully scattered discretization at the same h."""

import argparse
import time

from hybridnodes.bench import run_case
from hybridnodes.config import CaseConfig


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--case", choices=("obstacles2d", "spheres3d"), default="obstacles2d")
    parser.add_argument("--h", type=float, default=None,
                        help="regular spacing (defaults: 0.01 in 2D, 0.05 in 3D)")
    parser.add_argument("--t-end", type=float, default=None)
    parser.add_argument("--out", default="out/irregular")
    args = parser.parse_args()

    h = args.h if args.h is not None else (0.01 if args.case == "obstacles2d" else 0.05)
    t_end = args.t_end if args.t_end is not None else (0.1 if args.case == "obstacles2d" else 0.05)
    for disc in ("hybrid", "pure-scattered"):
        config = CaseConfig(case=args.case, h_r=h, t_end=t_end, steady_tol=0.0,
                            discretization=disc, out_dir=f"{args.out}/{disc}")
        t0 = time.perf_counter()
        result = run_case(config)
        nr, ns, nb = result.counts
        print(f"{disc:15s} N={result.n_total} (reg {nr} / scat {ns} / bnd {nb})  "
              f"Nu={result.final_nu:.4f}  wall={time.perf_counter() - t0:.1f}s [{result.status}]")


if __name__ == "__main__":
    main()
