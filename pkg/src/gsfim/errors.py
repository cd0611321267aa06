"""Exception types shared across the package."""


class GsfimError(ValueError):
    """Base class for all library errors."""


class ConfigError(GsfimError):
    """Invalid, inconsistent, or unparsable configuration."""


class InvalidDimensionsError(GsfimError):
    """Dimension arguments outside their legal range (e.g. k > n, bad CRM order)."""


class DimensionMismatchError(GsfimError):
    """Operands whose shapes are individually legal but mutually inconsistent."""


class WrongBitCountError(GsfimError):
    """Bit vector of the wrong length for the configured symbol."""


class InvalidSupportError(GsfimError):
    """Symbol support outside the set of valid LUT combinations."""


class InsufficientNullSpaceError(GsfimError):
    """Interference null space too small to host the requested streams."""


class SearchSpaceTooLargeError(GsfimError):
    """Exhaustive search rejected by the configured hypothesis-count guard."""


class InvalidModeError(GsfimError):
    """Operation invoked in a mode it does not support."""
