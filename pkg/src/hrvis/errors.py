"""Exception hierarchy.

Every error raised on bad input data derives from :class:`DataError`; the CLI
maps that family to exit code 3 and :class:`TransportError` to exit code 4.
"""

from __future__ import annotations


class HrvisError(Exception):
    """Base class for all package errors."""


class DataError(HrvisError, ValueError):
    """Input data violates an operation's precondition."""


class MalformedHeader(DataError):
    pass


class RowError(DataError):
    """A CSV row (1-based file line number) failed validation."""

    def __init__(self, row: int, message: str = ""):
        self.row = row
        super().__init__(f"line {row}: {message}" if message else f"line {row}")


class NonPositiveInterval(RowError):
    pass


class NonMonotonicTimestamp(RowError):
    pass


class AllBeatsRejected(DataError):
    pass


class EmptySeries(DataError):
    pass


class TooFewBeats(DataError):
    pass


class TooFewPairs(DataError):
    pass


class TooFewRows(DataError):
    pass


class SeriesTooShort(DataError):
    pass


class InvalidConfig(DataError):
    pass


class ScheduleInfeasible(DataError):
    pass


class NoBeatsOnDay(DataError):
    pass


class DegenerateDistances(DataError):
    pass


class SegmentTooShort(DataError):
    pass


class DegenerateSpread(DataError):
    pass


class BisectionFailed(DataError):
    def __init__(self, row: int):
        self.row = row
        super().__init__(f"perplexity bisection did not converge for row {row}")


class NumericalDivergence(DataError):
    pass


class UnknownPalette(DataError, KeyError):
    pass


class UnknownLabel(DataError):
    pass


class WrongItemSet(DataError):
    pass


class MissingItem(DataError):
    def __init__(self, code: str):
        self.code = code
        super().__init__(f"response is missing item {code}")


class IncompleteCoverage(DataError):
    pass


class UnparseableResponse(HrvisError):
    def __init__(self, raw: str, message: str = "could not parse Likert labels"):
        self.raw = raw
        super().__init__(message)


class TransportError(HrvisError):
    pass
