"""Exception hierarchy shared across the package."""


class RotorLabError(Exception):
    """Base class for all package errors."""


class ConfigurationError(RotorLabError, ValueError):
    """Invalid parameters, grid sizes or config documents."""


class UsageError(RotorLabError, ValueError):
    """An operation was called with inputs outside its domain."""


class LeakageError(RotorLabError):
    """Probability reached the edge of the momentum grid.

    The discrete transform is periodic in momentum, so any weight at the
    boundary would wrap around and corrupt the widths.
    """

    def __init__(self, message, kick=None, leakage=None):
        super().__init__(message)
        self.kick = kick
        self.leakage = leakage
        self.series = None


class FitError(RotorLabError):
    """A least-squares fit could not produce a meaningful answer."""


class FitDegenerateError(FitError):
    """Scaling fit landed on the search-box boundary or non-positive (c, a)."""


class GridTooSmallError(RotorLabError):
    """The momentum grid is too small for a converged result."""


class CheckpointMismatchError(RotorLabError):
    """A checkpoint does not belong to the run being resumed."""
