"""Exception hierarchy shared across the pipeline."""

from __future__ import annotations


class PipelineError(Exception):
    """Base class for every error raised by this package."""


class InvalidInput(PipelineError, ValueError):
    """An operation was called with arguments violating its preconditions."""


class InvalidRequest(PipelineError):
    """A backend request was malformed (maps to HTTP 400)."""


class TransportError(PipelineError):
    """A remote backend could not be reached after exhausting retries."""


class ProtocolError(PipelineError):
    """A remote backend replied with a server error or a schema-invalid body."""

    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


class NoDetections(PipelineError):
    """The detector found nothing on any scanned frame."""


class MergeError(PipelineError):
    """Bidirectional track merge failed (seed frame missing from a direction)."""


class ParserOutputError(PipelineError):
    """The referring parser returned malformed output after a repair attempt."""


class CodecError(PipelineError):
    """RLE counts do not describe a grid of the requested dimensions."""
