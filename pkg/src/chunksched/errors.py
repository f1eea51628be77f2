"""Exception types shared across the package."""


class ChunkschedError(Exception):
    """Base class for all package errors."""


class DimensionError(ChunkschedError, ValueError):
    """Vector lengths do not match."""


class NoInnovativePacketError(ChunkschedError):
    """The transmitter's span is contained in the receiver's span."""


class ParameterError(ChunkschedError, ValueError):
    """Invalid model parameter."""


class DegenerateStateError(ChunkschedError):
    """A conditional delay pmf has no remaining mass."""


class SchedulingError(ChunkschedError):
    """Transcript invariant violated (e.g. two sends on one link in one slot)."""


class NonTerminationError(ChunkschedError):
    """A trial hit max_slots before the sink could decode."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class ValidationError(ChunkschedError, ValueError):
    """Configuration failed validation; ``path`` names the offending field."""

    def __init__(self, path, message):
        super().__init__(f"{path}: {message}")
        self.path = path


class CellError(ChunkschedError):
    """One or more runs of a cell failed; ``failures`` lists (realization, trial, error)."""

    def __init__(self, failures):
        self.failures = list(failures)
        head = ", ".join(f"(r={r}, t={t}): {e}" for r, t, e in self.failures[:3])
        more = f" and {len(self.failures) - 3} more" if len(self.failures) > 3 else ""
        super().__init__(f"{len(self.failures)} run(s) failed: {head}{more}")
