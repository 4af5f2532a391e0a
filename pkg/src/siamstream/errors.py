"""Exception types shared across the package."""


class ConfigurationError(ValueError):
    """Invalid or inconsistent configuration values."""


class ShapeError(ValueError):
    """Array arguments with incompatible shapes."""


class NumericError(ArithmeticError):
    """Non-finite values where finite numbers are required."""


class InsufficientDataError(RuntimeError):
    """Not enough stored examples to carry out the requested operation."""


class NoPredictionError(RuntimeError):
    """No prediction can be formed from the current state."""


class StreamFormatError(ValueError):
    """Malformed stream input, for example a bad CSV row."""


class GenerationError(RuntimeError):
    """A synthetic generator failed to produce a sample within its attempt bound."""
