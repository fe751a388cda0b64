"""Exceptions shared across the surrogate pool."""


class SurrogateError(Exception):
    """Base class for surrogate failures."""


class FitError(SurrogateError):
    """A surrogate could not be fitted on the given data."""


class SelectionError(SurrogateError):
    """No surrogate in the pool could be fitted."""
