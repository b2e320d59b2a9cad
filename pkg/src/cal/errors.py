"""Exception types shared across the package."""


class CalError(Exception):
    """Base class for errors raised by this package."""


class SpaceError(CalError, ValueError):
    """Invalid space construction or a point outside the space."""


class SpaceTooLargeError(SpaceError):
    """An exact operation was requested on a space above its size cap."""


class UnsupportedSetShapeError(CalError, ValueError):
    """A geometric operation needs a registered set structure it cannot get."""


class DistanceCapExceededError(CalError):
    """A bounded distance search gave up before finding a member."""


class NoValidCandidateError(CalError):
    """No candidate set in the family passed the half-measure gate."""


class RhoUnachievableError(CalError, ValueError):
    """No expansion radius reaches the requested target error mass."""


class NoPartitionError(CalError):
    """No label subset can reach the required mass window."""


class NoCertificateError(CalError):
    """Bound preconditions do not hold for the supplied parameters."""


class FailureSetEmptyError(CalError):
    """The failure event is empty, so no training set can be steered into it."""


class ConfigError(CalError, ValueError):
    """A run configuration fails schema or semantic validation."""
