"""Exception types shared across the package."""


class UsageError(ValueError):
    """Caller violated a documented precondition (bad argument, empty input)."""


class ShapeError(UsageError):
    """Array shapes are inconsistent with the operation's contract."""


class TrainingError(RuntimeError):
    """Training diverged (NaN/Inf); message names the failing step."""


class CorpusCorruptionError(RuntimeError):
    """On-disk corpus manifest and payload files disagree."""
