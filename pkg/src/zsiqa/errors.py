"""Exception hierarchy shared by every zsiqa module."""


class ZsiqaError(Exception):
    """Base class for all errors raised by this package."""


class DecodeError(ZsiqaError):
    """Image byte stream could not be decoded (or uses an unsupported codec)."""


class ConfigError(ZsiqaError):
    """A parameter or configuration value violates its contract."""


class ShapeError(ZsiqaError):
    """Operands have incompatible or unexpected shapes."""


class SpecError(ZsiqaError):
    """A backbone spec is invalid or references unresolvable graph tensors."""


class DegenerateInputError(ZsiqaError):
    """Input is degenerate for the requested statistic (zero norm/variance)."""


class ParseError(ZsiqaError):
    """A text input (manifest, config file) is malformed.

    ``line`` is the 1-based line number when known, else None.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DuplicateError(ZsiqaError):
    """A manifest contains a repeated (reference, distorted) pair."""


class AdapterError(ZsiqaError):
    """A dataset adapter could not resolve a referenced file."""


class FitError(ZsiqaError):
    """The logistic score mapping failed to converge."""


class NumericsError(ZsiqaError):
    """A computation produced non-finite values."""
