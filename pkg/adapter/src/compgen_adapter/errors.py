class AdapterError(Exception):
    """Base for everything this tool raises on bad input; CLI exit 1."""


class ManifestError(AdapterError):
    """Manifest unreadable, malformed, or with inconsistent row indices."""


class ModelError(AdapterError):
    """Model identifier cannot be resolved to a working backend."""
