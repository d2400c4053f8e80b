class BRCDError(Exception):
    """Base class for errors raised by this package."""


class InvalidInputError(BRCDError, ValueError):
    pass


class DimensionError(BRCDError, ValueError):
    pass


class FormatError(BRCDError, ValueError):
    """A file does not match the expected binary layout."""


class NumericError(BRCDError, ArithmeticError):
    """Training diverged or a gradient check failed."""
