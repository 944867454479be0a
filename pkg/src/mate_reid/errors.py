"""Exception hierarchy shared by the library and the CLI."""

from __future__ import annotations


class MateError(Exception):
    """Base class for every error raised on purpose by mate_reid."""

    exit_code = 1


class ConfigError(MateError):
    """Invalid configuration file, environment value or argument."""

    exit_code = 2


class DataError(MateError):
    """Dataset content that violates the data model."""

    exit_code = 3


class NumericError(MateError):
    """A non-finite value appeared in a forward or backward pass."""

    exit_code = 4

    def __init__(self, message: str, *, layer: int | None = None, coordinates: dict[str, int] | None = None) -> None:
        super().__init__(message)
        self.layer = layer
        self.coordinates = dict(coordinates or {})
