"""Exception hierarchy.

Every error carries the process exit code the CLI maps it to:
2 for bad input, 3 for validation failures, 4 for internal invariant breaches.
"""

from __future__ import annotations


class CollarwaveError(Exception):
    exit_code = 4


class InputError(CollarwaveError):
    """Malformed or unusable input data."""

    exit_code = 2


class ValidationFailure(CollarwaveError):
    exit_code = 3


class InvariantBreach(CollarwaveError):
    exit_code = 4


class LineError(InputError):
    """Input error tied to a 1-based line number of a text file."""

    def __init__(self, line_no: int, message: str = "") -> None:
        self.line_no = line_no
        detail = f": {message}" if message else ""
        super().__init__(f"{type(self).__name__} at line {line_no}{detail}")


# ingest
class MalformedHeader(InputError):
    pass


class ChecksumMismatch(InputError):
    pass


class EmptyRecording(InputError):
    pass


class BadHeader(InputError):
    pass


class RowParse(LineError):
    pass


class NonMonotonicTimestamp(LineError):
    pass


class UnknownLabel(LineError):
    pass


class InvertedInterval(LineError):
    pass


class OverlapWithinTrack(LineError):
    pass


class MixedAnnotators(LineError):
    pass


class RecordingMismatch(InputError):
    pass


class TooFewSamples(InputError):
    pass


# preprocess / features
class RecordingTooShort(InputError):
    pass


class EmptyInput(InputError):
    pass


class MixedWindowLength(InputError):
    pass


class TooFewRows(InputError):
    pass


# models
class SingleClassDataset(InputError):
    pass


class SchemaMismatch(InputError):
    pass


class NonFiniteInput(InputError):
    pass


class ClassSmallerThanK(InputError):
    pass


class VersionMismatch(InputError):
    pass


class CorruptArtifact(InputError):
    pass


# eval
class LengthMismatch(InputError):
    pass


class Empty(InputError):
    pass
