"""Hybrid scattered-regular meshless solver for natural-convection benchmarks."""

from .approx import (Laplacian, NormalDerivative, Partial, StencilSpec, WeightRow,
                     condition_number, find_stencil, mon_weights, rbf_fd_weights,
                     select_method)
from .bench import dump_nodes, dump_weights_diag, run_case, sweep
from .config import CaseConfig, build_domain, parse_config
from .errors import (ConfigurationError, PoissonConvergenceError, SingularSystemError,
                     SolverDivergenceError)
from .geometry import (BoundarySample, Circle, DomainSpec, Ellipse, Obstacle, Star,
                       discretize_boundary, signed_distance)
from .nodegen import (Node, NodeSet, SpacingFunction, carve_transition, hybrid_discretize,
                      regular_fill, scattered_fill)
from .operators import FieldState, SparseOperator, apply, assemble, divergence
from .solver import (PhysicsParams, PoissonSolveSettings, RunResult, TimeControls,
                     build_operators, momentum_predict, nusselt_average, pressure_solve,
                     run, temperature_step, velocity_correct)

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
