"""Exception types shared across the optimizer."""

__all__ = [
    "McoError",
    "TaskFileError",
    "ParseError",
    "LinkError",
    "InternalError",
    "PipelineError",
]


class McoError(Exception):
    """Base class for all optimizer errors."""


class TaskFileError(McoError):
    """Malformed task-file image (bad magic, truncation, range errors)."""


class ParseError(McoError):
    """Undecodable instruction stream."""

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (text offset 0x{offset:X})"
        super().__init__(message)
        self.offset = offset


class LinkError(McoError):
    """Relocation or reference information inconsistent with the code."""


class InternalError(McoError):
    """Invariant violated mid-pass; indicates a bug, not bad input."""


class PipelineError(McoError):
    """Phase failure wrapper so the CLI can report which pass died."""

    def __init__(self, phase: str, cause: BaseException):
        super().__init__(f"{phase}: {cause}")
        self.phase = phase
        self.cause = cause
