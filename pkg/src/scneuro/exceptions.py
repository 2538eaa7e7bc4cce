class ScneuroError(Exception):
    """Base class for all errors raised by scneuro."""


class UnrepresentableParameterError(ScneuroError, ValueError):
    """A model parameter does not fit the configured register widths."""


class RoutingTableError(ScneuroError, KeyError):
    """A spike names a source that has no entry in the routing table."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "routing table fault"


class PendingBufferOverflowError(ScneuroError, RuntimeError):
    """The pending-event buffer exceeded its configured memory budget."""


class ConvergenceError(ScneuroError, RuntimeError):
    """An iterative solver did not converge."""


class GridMismatchError(ScneuroError, ValueError):
    """Two transfer curves were compared on different input grids."""


class FrameError(ScneuroError, ValueError):
    """Base class for malformed pulse frames."""


class BadMagicError(FrameError):
    pass


class TruncatedFrameError(FrameError):
    pass


class VersionMismatchError(FrameError):
    pass


class FrameTooLargeError(FrameError):
    pass


class WeightOutOfRangeError(FrameError):
    pass
