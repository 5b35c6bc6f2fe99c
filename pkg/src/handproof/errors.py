"""Exception hierarchy shared across the toolkit."""


class HandproofError(Exception):
    """Base class for every error raised by this package."""


# --- trajectory validation ---

class TooFewPoints(HandproofError):
    pass


class NonMonotonicTime(HandproofError):
    pass


class NonFiniteValue(HandproofError):
    pass


class DegenerateDuration(HandproofError):
    pass


class EmptyTrainingSet(HandproofError):
    pass


# --- sigma-lognormal ---

class EmptyPlan(HandproofError):
    pass


class ExtractionFailed(HandproofError):
    pass


class LengthMismatch(HandproofError):
    pass


class NonPositiveDuration(HandproofError):
    pass


# --- classifier ---

class DimensionMismatch(HandproofError):
    pass


class StaleCache(HandproofError):
    pass


class SingleClassTrainingSet(HandproofError):
    pass


class UnsupportedVersion(HandproofError):
    pass


class CorruptFile(HandproofError):
    pass


# --- evaluation ---

class SingleClassDataset(HandproofError):
    pass


class SingleClassScores(HandproofError):
    pass


class SingleClassLabels(HandproofError):
    pass


class MissingDataset(HandproofError):
    pass


# --- dataset io ---

class IoError(HandproofError):
    pass


class NotFound(HandproofError):
    pass


class ParseError(HandproofError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.line = line


class MalformedXml(HandproofError):
    pass


class EmptyDataset(HandproofError):
    pass
