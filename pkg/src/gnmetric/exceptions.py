class GnMetricError(ValueError):
    """Base class for errors raised by this package."""


class ArityError(GnMetricError):
    pass


class PointError(GnMetricError):
    pass


class SpaceValidationError(GnMetricError):
    def __init__(self, message, cell=None):
        super().__init__(message)
        self.cell = cell


class PlanError(GnMetricError):
    pass


class EstimateUndefined(GnMetricError):
    """Every sampled denominator was zero."""


class SolverError(GnMetricError):
    """A solver hypothesis was violated before iteration could proceed."""

    code = "solver-error"


class CommutationError(SolverError):
    code = "commutation-violated"


class PreimageResidualError(SolverError):
    code = "preimage-residual-exceeded"


class ConfigError(GnMetricError):
    def __init__(self, message, path: str = ""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
