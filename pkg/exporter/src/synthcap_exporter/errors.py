"""Exception types raised by the exporter."""


class ExportError(Exception):
    """Base class for all exporter failures."""


class ManifestError(ExportError):
    """A manifest file is missing, malformed, or inconsistent."""


class BackendError(ExportError):
    """A model backend could not be constructed or loaded."""
