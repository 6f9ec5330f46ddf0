"""Exception types shared across the package."""


class LPLError(Exception):
    """Base class for all package errors."""


class InputError(LPLError, ValueError):
    """Invalid argument: wrong shape, sign or inconsistent parameters."""


class UnsupportedError(LPLError):
    """Operation not available for the given structure or path."""


class NumericalError(LPLError):
    """Non-finite value produced during time stepping.

    Attributes:
        step: index of the step that produced the bad value.
        partial: states computed before the failure (may be None).
    """

    def __init__(self, message, step=None, partial=None):
        super().__init__(message)
        self.step = step
        self.partial = partial


class CollisionError(LPLError):
    """Two point vortices came closer than the collision tolerance."""

    def __init__(self, message, pair=None, gap=None):
        super().__init__(message)
        self.pair = pair
        self.gap = gap


class EfficiencyError(LPLError):
    """Rejection sampler acceptance rate is too low to be useful."""


class ConfigError(LPLError, ValueError):
    """Invalid run configuration; `field` names the offending entry."""

    def __init__(self, message, field=None):
        super().__init__(message)
        self.field = field
