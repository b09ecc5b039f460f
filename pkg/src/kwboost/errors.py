"""Exception types shared across the toolkit.

Everything raised on bad user input derives from ToolkitError so the
CLI can map it to a data-error exit code in one place.
"""


class ToolkitError(Exception):
    """Base class for recoverable toolkit errors."""


class NormalizationError(ToolkitError):
    """A keyword cannot be normalized (or a mapping is inconsistent)."""


class ArpaError(ToolkitError):
    """An ARPA language model file is malformed."""

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        loc = ""
        if path is not None:
            loc = f"{path}:"
        if line is not None:
            loc += f"{line}:"
        super().__init__(f"{loc} {message}" if loc else message)
        self.path = path
        self.line = line


class DataFormatError(ToolkitError):
    """A data file (logits, vocabulary, manifest, list, ...) is malformed."""


class ConfigError(ToolkitError):
    """A configuration value violates its documented constraints."""
