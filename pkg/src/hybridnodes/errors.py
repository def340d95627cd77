"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid case setup: bad geometry, spacing, or config file contents."""


class SingularSystemError(RuntimeError):
    """A local weight system could not be solved; carries its condition number."""

    def __init__(self, message, kappa=float("inf")):
        super().__init__(message)
        self.kappa = kappa


class SolverDivergenceError(RuntimeError):
    """Time stepping produced a non-finite field value."""

    def __init__(self, message, step=None, node=None):
        super().__init__(message)
        self.step = step
        self.node = node


class PoissonConvergenceError(RuntimeError):
    """Pressure Poisson iteration failed to reach the requested residual."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual
