import os

# timing-sensitive acceptance criteria assume single-threaded BLAS; must be
# set before numpy loads
for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(var, "1")

import numpy as np
import pytest

from hybridnodes.config import CaseConfig, build_domain
from hybridnodes.nodegen import hybrid_discretize


@pytest.fixture(scope="session")
def dvd_coarse():
    """Small hybrid dvd node set shared by operator-level tests."""
    config = CaseConfig(case="dvd", h_r=0.0398)
    spec = build_domain(config)
    return config, spec, hybrid_discretize(config, spec)


@pytest.fixture(scope="session")
def obstacles_desk():
    """Desk-scale obstacles2d node set (h_r = 0.02)."""
    config = CaseConfig(case="obstacles2d", h_r=0.02)
    spec = build_domain(config)
    return config, spec, hybrid_discretize(config, spec)


@pytest.fixture(scope="session")
def scattered_cloud():
    """Pure-scattered unit-box fill, constant spacing 0.05."""
    config = CaseConfig(case="dvd", h_r=0.05, discretization="pure-scattered")
    spec = build_domain(config)
    return config, spec, hybrid_discretize(config, spec)
