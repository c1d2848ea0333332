class FormatError(ValueError):
    """Raised when an input file does not match its declared format."""


class ConfigError(ValueError):
    """Raised for unknown or malformed configuration entries."""
