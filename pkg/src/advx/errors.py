"""Shared exception types.

The CLI maps these onto exit codes: usage errors exit 2 (click's default),
DataFormatError exits 3, ConsistencyError exits 4.
"""


class AdvxError(Exception):
    """Base class for all package errors."""


class ShapeError(AdvxError, ValueError):
    """Input does not match the shape a network or operation expects."""


class DataFormatError(AdvxError):
    """A file on disk does not follow its declared binary/JSON format."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class IntegrityError(DataFormatError):
    """A bundle file fails its manifest checksum."""


class ConsistencyError(AdvxError):
    """Cross-component invariants do not hold (mismatched lengths, orderings)."""


class DegenerateDataError(AdvxError, ValueError):
    """Input data carries too little variation for the requested operation."""
