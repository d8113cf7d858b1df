"""Exception hierarchy shared by the library and the CLI."""


class HeightlabError(Exception):
    """Base class for every error raised by heightlab."""


class ResourceError(HeightlabError):
    """A configured size cap (bit length, degree) would be exceeded."""


class NumericError(HeightlabError):
    """A numerical procedure failed to converge.

    ``residual`` carries the best residual reached, when there is one.
    """

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class ParseError(HeightlabError, ValueError):
    """Malformed textual input; ``position`` is the 0-based offending field."""

    def __init__(self, message: str, position: int | None = None):
        if position is not None:
            message = f"{message} (at field {position})"
        super().__init__(message)
        self.position = position
