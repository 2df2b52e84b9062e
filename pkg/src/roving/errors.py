"""Exception taxonomy shared by all roving modules."""


class RovingError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(RovingError):
    """Malformed or inconsistent configuration input."""


class RowSumError(ConfigError):
    """A routing row does not sum to one."""


class SingularRouting(ConfigError):
    """The routing matrix admits no unique traffic solution."""


class NegativeParameter(ConfigError):
    """A rate, time, weight or probability is out of range."""


class NegativeArgument(RovingError):
    """Transform evaluated left of the nonnegative real axis."""


class PoleDetected(RovingError):
    """Series division hit a true pole (not a removable singularity)."""


class IndeterminateScalar(RovingError):
    """Scalar evaluation hit 0/0; the caller must switch to jets."""


class NotNormalized(RovingError):
    """Moment extraction on a jet whose constant term is not 1."""


class ZeroMeanDistribution(RovingError):
    """Past/residual decomposition of a zero-length random variable."""


class NoConvergence(RovingError):
    """A fixed-point or product iteration failed to converge."""


class UnstableModel(RovingError):
    """Analysis requested for a model with total load >= 1."""


class DegenerateModel(RovingError):
    """Analysis requested for a model whose mean cycle length is zero."""


class ImpossibleCondition(RovingError):
    """Conditional waiting time requested for a zero-probability event."""


class NoInternalArrivals(RovingError):
    """Internal waiting time requested for a queue fed only externally."""


class NoExternalArrivals(RovingError):
    """External waiting time requested for a queue with no Poisson feed."""


class ZeroSwitchover(RovingError):
    """Switch-period waiting time requested for a zero-length switch-over."""


class DeadQueue(RovingError):
    """Waiting time requested for a queue that never receives customers."""


class ModelMismatch(RovingError):
    """Comparison between results produced from different models."""


class StabilityWarning(UserWarning):
    """Model-level notice that the offered load is >= 1."""
