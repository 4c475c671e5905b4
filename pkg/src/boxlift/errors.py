"""Exception types raised across the toolkit."""


class BoxliftError(Exception):
    """Base class for all boxlift errors."""


class InvalidDepthError(BoxliftError):
    """A depth sample was zero or negative where a positive depth is required."""


class EmptySegmentError(BoxliftError):
    """Lifting a mask produced no 3D points; the detection cannot be inflated."""


class AllNoiseError(BoxliftError):
    """Clustering labeled every point as noise; no cluster to retain."""


class ConfigError(BoxliftError):
    """Invalid or incomplete configuration (bad values, missing shape prior, unknown keys)."""


class ParseError(BoxliftError):
    """A binary or structured file could not be parsed.

    ``offset`` is the byte offset at which the problem was detected, when known.
    """

    def __init__(self, message: str, offset: int | None = None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class SchemaError(BoxliftError):
    """A JSON document does not conform to the expected schema."""
