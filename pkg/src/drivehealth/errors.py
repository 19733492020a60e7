"""Exception hierarchy shared across the toolkit."""

from __future__ import annotations


class DriveHealthError(Exception):
    """Base class for every error raised by drivehealth."""


# -- ingestion ---------------------------------------------------------------


class MissingColumn(DriveHealthError, ValueError):
    def __init__(self, name: str) -> None:
        super().__init__(f"missing mandatory column {name!r}")
        self.name = name


class DuplicateColumn(DriveHealthError, ValueError):
    def __init__(self, name: str) -> None:
        super().__init__(f"duplicate column {name!r}")
        self.name = name


class RowError(DriveHealthError, ValueError):
    """A single malformed data row; ``line`` is 1-based and counts the header."""

    def __init__(self, line: int, cause: str) -> None:
        super().__init__(f"line {line}: {cause}")
        self.line = line
        self.cause = cause


class AbortThresholdExceeded(DriveHealthError):
    def __init__(self, bad: int, total: int, threshold: float, errors: list[RowError]) -> None:
        super().__init__(
            f"{bad} of {total} rows rejected, above the {threshold:.2%} abort threshold"
        )
        self.bad = bad
        self.total = total
        self.threshold = threshold
        self.errors = errors


# -- datasets ----------------------------------------------------------------


class InvalidWindow(DriveHealthError, ValueError):
    pass


class InvalidHorizon(DriveHealthError, ValueError):
    pass


class NegativeDuration(DriveHealthError, ValueError):
    pass


class DuplicateSnapshot(DriveHealthError, ValueError):
    pass


class DegenerateSplit(DriveHealthError, ValueError):
    pass


# -- statistics --------------------------------------------------------------


class EmptyInput(DriveHealthError, ValueError):
    pass


class EmptyGroup(DriveHealthError, ValueError):
    pass


# -- trees -------------------------------------------------------------------


class EmptyDataset(DriveHealthError, ValueError):
    pass


class DimensionMismatch(DriveHealthError, ValueError):
    pass


# -- evaluation --------------------------------------------------------------


class HorizonExceedsWindow(DriveHealthError, ValueError):
    pass


class DegenerateLabels(DriveHealthError, ValueError):
    pass


# -- cli / synth -------------------------------------------------------------


class UnknownFormat(DriveHealthError, ValueError):
    pass


class InvalidSpec(DriveHealthError, ValueError):
    pass
