"""Benchmark orchestration: runs cases, writes CSV artifacts, drives sweeps."""

from __future__ import annotations

import csv
import math
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import CaseConfig, build_domain, parse_config
from .errors import PoissonConvergenceError, SolverDivergenceError
from .nodegen import hybrid_discretize
from .solver import RunResult, run

_SWEEP_COLUMNS = ["parameter", "N", "Nu", "time_total", "time_weights", "time_stepping", "status"]


def _write_csv(path: Path, header: list[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        w.writerows(rows)


def write_outputs(result: RunResult, out_dir) -> None:
    """nu_series.csv, fields_<t>.csv, timings.csv under out_dir."""
    out = Path(out_dir)
    _write_csv(out / "nu_series.csv", ["step", "t", "Nu"],
               zip(result.nu_steps, result.nu_times, result.nu_values))
    _write_csv(out / "timings.csv", ["phase", "seconds"],
               sorted(result.timings.items()))
    if result.state is not None and result.nodeset is not None:
        ns, st = result.nodeset, result.state
        dim = ns.dim
        axes = list("xyz"[:dim])
        vel = list("uvw"[:dim])
        header = axes + vel + ["p", "T", "h"]
        rows = np.column_stack([ns.positions, st.velocity, st.pressure,
                                st.temperature, ns.spacing])
        label = ("%g" % result.t_final).replace(".", "p")
        _write_csv(out / f"fields_{label}.csv", header, rows)


def run_case(config: CaseConfig, write: bool = True) -> RunResult:
    """Build geometry, discretize, solve, and emit artifacts."""
    try:
        result = run(config)
    except (SolverDivergenceError, PoissonConvergenceError) as exc:
        result = RunResult(
            case=config.case, discretization=config.discretization,
            final_nu=float("nan"), nu_steps=np.empty(0, dtype=int),
            nu_times=np.empty(0), nu_values=np.empty(0), counts=(0, 0, 0),
            n_total=0, timings={}, dt=float("nan"),
            steps=getattr(exc, "step", 0) or 0, t_final=float("nan"),
            status=f"error: {exc}")
    if write:
        write_outputs(result, config.out_dir)
    return result


def sweep(config: CaseConfig, param: str, values, out_dir=None) -> list[RunResult]:
    """One run per grid value of `param`; aggregate written to sweep.csv.

    Individual failures are recorded in the aggregate and the sweep
    continues.  Each run's artifacts land in a value-tagged subdirectory.
    """
    out = Path(out_dir if out_dir is not None else config.out_dir)
    results = []
    rows = []
    for value in values:
        tag = ("%g" % value).replace(".", "p") if isinstance(value, float) else str(value)
        sub = out / f"{param}_{tag}"
        cfg = config.with_overrides(**{param: value, "out_dir": str(sub)})
        result = run_case(cfg)
        results.append(result)
        t = result.timings
        rows.append([
            value, result.n_total,
            "%r" % result.final_nu if math.isfinite(result.final_nu) else "nan",
            t.get("total", float("nan")), t.get("weights", float("nan")),
            t.get("stepping", float("nan")), result.status,
        ])
    _write_csv(out / "sweep.csv", _SWEEP_COLUMNS, rows)
    return results


def dump_nodes(config: CaseConfig, path=None) -> Path:
    """Discretization-only export of the case's node set."""
    nodeset = hybrid_discretize(config)
    out = Path(path) if path is not None else Path(config.out_dir) / "nodes.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    nodeset.to_csv(out)
    return out


def dump_weights_diag(config: CaseConfig, path=None) -> Path:
    """Per-node condition-number map for the case's differential operators.

    The local collocation matrix is shared by every operator kind, so a
    single kappa column serves the Laplacian and first derivatives alike.
    """
    from .approx import Laplacian, Partial, compute_weights, METHOD_MON

    nodeset = hybrid_discretize(config)
    ops = [Laplacian()] + [Partial(a) for a in range(nodeset.dim)]
    table = compute_weights(nodeset, ops, with_kappa=True)
    out = Path(path) if path is not None else Path(config.out_dir) / "weights_diag.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    axes = list("xyz"[:nodeset.dim])
    rows = []
    for i in range(len(nodeset)):
        if table.sizes[i] == 0:
            continue
        method = "mon" if table.method[i] == METHOD_MON else "rbffd"
        rows.append(list(nodeset.positions[i]) + [method, int(table.sizes[i]),
                                                  repr(float(table.kappa[i]))])
    _write_csv(out, axes + ["method", "stencil_size", "kappa"], rows)
    return out
