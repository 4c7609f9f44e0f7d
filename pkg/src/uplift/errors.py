"""Exception types shared across the package.

The hierarchy mirrors how callers react: `DataError` subclasses mean the
input was bad (CLI exit code 2), `IoError` and `SourceError` mean the
environment failed (exit code 3).
"""


class UpliftError(Exception):
    """Base class for all package errors."""


class DataError(UpliftError):
    """Bad input data; the caller supplied something unusable."""


class InvalidScore(DataError):
    """Sentiment score is not a finite real."""


class InvalidRatio(DataError):
    """Split ratio outside (0,1) or dataset too small to split."""


class FormatError(DataError):
    """File does not match the declared column contract."""


class DegenerateData(DataError):
    """Training set lacks the class diversity the trainer needs."""


class ShapeError(UpliftError):
    """Array dimensions inconsistent with the model."""


class StateError(UpliftError):
    """Operation invoked without required prior state (e.g. missing trace)."""


class ConfigError(UpliftError):
    """Cascade or source configuration is invalid or incomplete."""


class IoError(UpliftError):
    """Underlying file read/write failed."""


class SourceError(UpliftError):
    """A news source could not be fetched or parsed."""

    def __init__(self, source: str, reason: str):
        super().__init__(f"{source}: {reason}")
        self.source = source
        self.reason = reason


class StageFailure(UpliftError):
    """Remote rating stage failed; the batch is rejected wholesale."""


class UnsupportedVersion(DataError):
    """Model artifact written by an incompatible format version."""


class CorruptArtifact(DataError):
    """Model artifact fails shape or schema validation."""


class AlreadyPublished(DataError):
    """A feed for this date has already been published."""


class NotFound(DataError):
    """Referenced article or record does not exist."""
