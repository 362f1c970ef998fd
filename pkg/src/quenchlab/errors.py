"""Exception types shared across the package."""


class QuenchlabError(Exception):
    """Base class for package-specific failures."""


class SolverBreakdownError(QuenchlabError):
    """A linear solve could not reach the requested residual tolerance."""


class EigenConvergenceError(QuenchlabError):
    """An eigenvalue iteration failed to converge within its iteration cap."""


class IndefiniteOperatorError(QuenchlabError):
    """Inverse iteration found a non-positive or sign-changing principal mode.

    For linearizations around non-minimal steady states this is a meaningful
    stability verdict rather than a malfunction, so the estimate of the
    offending eigenvalue is carried along.
    """

    def __init__(self, message: str, nu_estimate: float | None = None):
        super().__init__(message)
        self.nu_estimate = nu_estimate


class StepRangeError(QuenchlabError):
    """A single time step carried the state to or past the blow-up level 1."""


class InsufficientDecayError(QuenchlabError):
    """A trajectory never entered the exponential tail needed for a rate fit."""


class ConfigError(QuenchlabError):
    """Invalid or malformed run configuration."""

    def __init__(self, message: str, key: str | None = None):
        super().__init__(message)
        self.key = key
