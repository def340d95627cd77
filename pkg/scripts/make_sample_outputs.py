#!/usr/bin/env python3
"""Regenerate the bundled sample CSVs consumed by the postproc plot tests.

Uses cheap coarse runs; takes a couple of minutes.
"""

import shutil
from pathlib import Path

from hybridnodes.bench import dump_weights_diag, run_case, sweep, write_outputs
from hybridnodes.config import CaseConfig

SAMPLES = Path(__file__).resolve().parent.parent / "postproc" / "sample-data"


def main():
    SAMPLES.mkdir(parents=True, exist_ok=True)
    work = SAMPLES / "_work"

    # Nu evolution + midline fields from the three coarse cavity runs
    for disc, tag in (("hybrid", "hybrid"), ("pure-regular", "regular"),
                      ("pure-scattered", "scattered")):
        config = CaseConfig(case="dvd", h_r=0.025, t_end=0.15, steady_tol=0.0,
                            discretization=disc, out_dir=str(work / disc))
        result = run_case(config)
        fields = next((work / disc).glob("fields_*.csv"))
        shutil.copy(fields, SAMPLES / f"fields_{tag}.csv")
        if disc == "hybrid":
            shutil.copy(work / disc / "nu_series.csv", SAMPLES / "nu_series.csv")
        print(f"{disc}: Nu={result.final_nu:.4f}")

    # convergence sweep aggregate
    config = CaseConfig(case="dvd", h_r=0.04, t_end=0.06, steady_tol=0.0,
                        out_dir=str(work / "sweep"))
    sweep(config, "h_r", [0.05, 0.04, 0.028, 0.02])
    shutil.copy(work / "sweep" / "sweep.csv", SAMPLES / "sweep.csv")

    # delta_h sensitivity aggregate
    config = CaseConfig(case="obstacles2d", h_r=0.025, t_end=0.02, steady_tol=0.0,
                        out_dir=str(work / "delta"))
    sweep(config, "delta_h", [4.0, 8.0, 16.0])
    shutil.copy(work / "delta" / "sweep.csv", SAMPLES / "delta_sweep.csv")

    # condition-number map
    config = CaseConfig(case="obstacles2d", h_r=0.025, out_dir=str(work / "diag"))
    dump_weights_diag(config, SAMPLES / "weights_diag.csv")

    shutil.rmtree(work)
    print(f"sample CSVs written to {SAMPLES}")


if __name__ == "__main__":
    main()
