"""Exception types shared across the package."""


class EverysearchError(Exception):
    """Base class for all everysearch errors."""


class FormatError(EverysearchError):
    """A binary file failed magic, header, or shape validation."""


class UnsupportedVersionError(FormatError):
    """A binary file declares a format version this build cannot read."""


class TruncatedFileError(FormatError):
    """A binary file ended before its declared payload."""


class DimensionMismatchError(EverysearchError):
    """Vector or weight dimensions do not agree with the expected shape."""


class NotFoundError(EverysearchError, KeyError):
    """The requested item id is not present."""


class DegenerateVectorError(EverysearchError):
    """A vector with (near-)zero norm where a direction is required."""


class EmptyInputError(EverysearchError, ValueError):
    """An operation that needs at least one token or element got none."""


class NumericDivergenceError(EverysearchError):
    """Training produced a non-finite loss."""
