"""Exception hierarchy shared across the library.

Validation problems (bad files, mismatched shapes, bad config) raise
:class:`ValidationError`; numerical breakdowns during optimization raise
:class:`NumericalError`.  The CLI maps these to exit codes 2 and 3.
"""


class SynthcapError(Exception):
    """Base class for all library errors."""


class ValidationError(SynthcapError):
    """Invalid input: malformed file, shape mismatch, bad configuration."""


class FormatError(ValidationError):
    """A binary or JSONL file does not conform to its documented layout."""


class NumericalError(SynthcapError):
    """A computation produced non-finite values or otherwise diverged."""
