"""Exception hierarchy.

InputError and its subclasses mark problems with user-supplied data
(bad files, bad arguments); the CLI maps them to exit code 1. Anything
else escaping a subcommand is an internal error (exit code 2).
"""


class CompgenError(Exception):
    """Base class for all toolkit errors."""


class InputError(CompgenError):
    """User input is malformed, missing, or inconsistent."""


class VocabularyError(InputError):
    pass


class CorpusError(InputError):
    pass


class ManifestError(InputError):
    pass


class IndexFormatError(InputError):
    """Index file is corrupt; message names the byte offset."""


class EmbeddingFormatError(InputError):
    """Embedding file is corrupt; message names the byte offset."""


class FitError(InputError):
    """Regression inputs are degenerate (single class, too few samples)."""
