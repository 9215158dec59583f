"""Exception types shared across the toolkit.

The CLI maps these onto machine-readable error categories and exit codes;
library code raises them directly.
"""


class AudioFormatError(ValueError):
    """Unsupported or malformed audio input (non-mono, wrong encoding, ...)."""


class ConfigError(ValueError):
    """Invalid or unparseable experiment configuration."""


class FactorizationError(RuntimeError):
    """Cholesky factorization failed even after the jitter schedule."""
