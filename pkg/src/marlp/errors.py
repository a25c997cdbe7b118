"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Raised when a run configuration is malformed or out of range."""


class ParameterError(ValueError):
    """Raised when a numeric argument violates a documented precondition."""


class NonUnichainError(RuntimeError):
    """Raised when a policy does not induce a unique stationary distribution."""


class DegenerateStateError(RuntimeError):
    """Raised when an occupancy table has a zero state marginal."""


class SolverError(RuntimeError):
    """Raised when an exact solver fails (infeasible, unbounded, no convergence)."""


class NumericalError(RuntimeError):
    """Raised when an iterative numeric routine exceeds its safety limits."""
