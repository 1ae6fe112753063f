class SensingError(Exception):
    """Base class for domain errors raised by this package."""


class UnidentifiableError(SensingError):
    """The trace carries no state change, so the off-rate cannot be estimated."""


class EstimatorUndefinedError(SensingError):
    """The closed-form uniform-sampling estimator has no valid root for these counts."""


class BoundsNotApplicableError(SensingError):
    """The window is too short for the sparse-sampling bounds to hold."""


class McmcConvergenceError(SensingError):
    """The circular-ensemble sampler froze (acceptance rate stuck at 0 or 1)."""
