"""Exception hierarchy.

Numerical failures and configuration problems are kept apart so the CLI
can map them onto distinct exit codes.
"""


class ExcessNoiseError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(ExcessNoiseError):
    """Invalid scenario configuration. ``path`` names the offending field."""

    def __init__(self, path, message):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}" if path else message)


class DimensionError(ExcessNoiseError, ValueError):
    pass


class GridError(ExcessNoiseError, ValueError):
    pass


class ResolutionError(ExcessNoiseError):
    """Grid too coarse for the requested modes."""

    def __init__(self, n, m, residual, message=""):
        self.n, self.m, self.residual = n, m, residual
        super().__init__(
            message or f"grid does not resolve modes: worst Gram residual {residual:.3e} at (n={n}, m={m})"
        )


class BasisValidationError(ExcessNoiseError):
    """Mode functions are not orthonormal (or frequencies invalid)."""

    def __init__(self, n, m, residual, message=""):
        self.n, self.m, self.residual = n, m, residual
        super().__init__(message or f"basis not orthonormal: residual {residual:.3e} at (n={n}, m={m})")


class DegenerateProfileError(ExcessNoiseError):
    pass


class ScaleError(ExcessNoiseError):
    pass


class NumericalError(ExcessNoiseError):
    """Base for failures that map to exit code 3."""


class SolverError(NumericalError):
    pass


class SelfOrthogonalError(NumericalError):
    pass


class CompletenessUnavailableError(NumericalError):
    pass


class NoSelectableModeError(NumericalError):
    pass


class ThresholdConvergenceError(NumericalError):
    pass


class StepSizeError(ExcessNoiseError):
    def __init__(self, dt, suggested):
        self.dt, self.suggested = dt, suggested
        super().__init__(f"step dt={dt:.3e} too large for the generator; use dt <= {suggested:.3e}")


class NotApplicableError(ExcessNoiseError):
    pass


class NotAtThresholdError(ExcessNoiseError):
    pass


class DegeneracyWarning(UserWarning):
    """Eigenvalues too close for biorthogonality to be guaranteed."""
