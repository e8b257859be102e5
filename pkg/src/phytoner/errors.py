"""Exception hierarchy shared by all phytoner modules.

Everything user-data-triggerable derives from ToolError so the CLI can map
it to exit code 1; genuine API misuse raises plain ValueError instead.
"""


class ToolError(Exception):
    """Base class for data and configuration failures."""


class ParseError(ToolError):
    """A text input (corpus TSV, JSONL, vocab, lexicon) is malformed."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ValidationError(ToolError):
    """Gold annotations violate the IOB2 scheme."""


class IntegrityError(ToolError):
    """Duplicate or conflicting identifiers in otherwise well-formed data."""


class FormatError(ToolError):
    """A binary file does not conform to its declared format."""


class SizingError(ToolError):
    """A requested sample, split or batch size cannot be satisfied."""


class JoinError(ToolError):
    """Corpus and embedding file disagree on sentence ids or piece counts."""


class DataError(ToolError):
    """Numeric payload is unusable (non-finite values, bad dimensions)."""


class OverlongWordError(ToolError):
    """A sentence's first word alone exceeds the wordpiece budget."""
