"""Command-line front-end: solve, sweep, nodes, weights-diag."""

import argparse
import os
import sys

# Single-threaded BLAS keeps phase timings comparable across runs; must be
# set before numpy loads.
for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(var, "1")


def _add_common(p):
    p.add_argument("config", help="case configuration file")
    p.add_argument("--out", help="output directory override")
    p.add_argument("--seed", type=int, help="RNG seed override")


def _load_config(args):
    from .config import parse_config

    config = parse_config(args.config)
    overrides = {}
    if args.out is not None:
        overrides["out_dir"] = args.out
    if args.seed is not None:
        overrides["rng_seed"] = args.seed
    return config.with_overrides(**overrides) if overrides else config


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="hybridnodes",
        description="Hybrid scattered-regular meshless natural-convection benchmarks")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run one case and write its artifacts")
    _add_common(p_solve)

    p_sweep = sub.add_parser("sweep", help="run a parameter grid and aggregate results")
    _add_common(p_sweep)
    p_sweep.add_argument("--param", required=True,
                         help="config field to sweep (e.g. h_r, delta_h, discretization)")
    p_sweep.add_argument("--values", required=True,
                         help="comma-separated grid values")

    p_nodes = sub.add_parser("nodes", help="write the discretization only")
    _add_common(p_nodes)

    p_diag = sub.add_parser("weights-diag", help="write the per-node condition-number map")
    _add_common(p_diag)

    args = parser.parse_args(argv)

    from .bench import dump_nodes, dump_weights_diag, run_case, sweep
    from .errors import ConfigurationError

    try:
        config = _load_config(args)
        if args.command == "solve":
            result = run_case(config)
            if result.status != "ok":
                print(f"run failed: {result.status}", file=sys.stderr)
                return 1
            nr, ns, nb = result.counts
            print(f"case={result.case} disc={result.discretization} "
                  f"N={result.n_total} (regular={nr} scattered={ns} boundary={nb})")
            print(f"steps={result.steps} dt={result.dt:.3e} t={result.t_final:.4f}")
            print(f"Nu={result.final_nu:.4f}")
            for phase in ("nodegen", "weights", "solver_setup", "stepping", "total"):
                print(f"time[{phase}] = {result.timings.get(phase, float('nan')):.3f} s")
            print(f"artifacts in {config.out_dir}")
        elif args.command == "sweep":
            raw = [v for v in args.values.split(",") if v]
            if args.param in ("discretization", "case", "split_orientation"):
                values = raw
            elif args.param in ("rng_seed", "n_obstacles", "n_spheres", "obstacle_lobes",
                                "nu_window", "nu_stride", "poisson_maxiter"):
                values = [int(v) for v in raw]
            else:
                values = [float(v) for v in raw]
            results = sweep(config, args.param, values)
            for value, result in zip(values, results):
                nu = f"{result.final_nu:.4f}" if result.status == "ok" else result.status
                print(f"{args.param}={value}: Nu={nu} "
                      f"total={result.timings.get('total', float('nan')):.1f}s")
            print(f"aggregate in {config.out_dir}/sweep.csv")
        elif args.command == "nodes":
            path = dump_nodes(config)
            print(f"nodes written to {path}")
        elif args.command == "weights-diag":
            path = dump_weights_diag(config)
            print(f"condition-number map written to {path}")
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
