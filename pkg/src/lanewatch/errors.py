"""Exception types shared across the pipeline.

The CLI maps these onto exit codes: ConfigError and FormatError exit 2,
DegenerateDataError and ConvergenceError exit 3.
"""


class ConfigError(ValueError):
    """Invalid configuration or command usage."""


class FormatError(ValueError):
    """A file did not match its declared on-disk format."""

    def __init__(self, message: str, byte_offset: int | None = None):
        if byte_offset is not None:
            message = f"{message} (byte offset {byte_offset})"
        super().__init__(message)
        self.byte_offset = byte_offset


class DegenerateDataError(ValueError):
    """Input data admits no meaningful fit (all-equal, non-positive, too few)."""


class ConvergenceError(RuntimeError):
    """An iterative solver exhausted its iteration budget."""
