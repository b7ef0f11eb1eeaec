"""Exception types shared across the package."""


class OmniEventError(Exception):
    """Base class for package errors."""


class ShapeError(OmniEventError, ValueError):
    """Array shapes are inconsistent with the declared contract."""


class RangeError(OmniEventError, ValueError):
    """A coordinate or code lies outside its admissible range."""


class ParameterError(OmniEventError, ValueError):
    """A numeric parameter violates its stated bounds."""


class NumericError(OmniEventError, ValueError):
    """Non-finite values where finite ones are required."""


class FormatError(OmniEventError, ValueError):
    """A binary container or CSV file does not match its schema."""


class ConfigError(OmniEventError, ValueError):
    """Bad configuration file; carries the offending line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
