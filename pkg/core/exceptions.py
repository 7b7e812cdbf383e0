"""
Flagforge — Engine error hierarchy.

Service code raises these; management commands turn them into CommandError.
"""


class FlagforgeError(Exception):
    """Base class for every engine error."""


class DimensionMismatch(FlagforgeError, ValueError):
    """Inputs live in different ambient spaces, or have the wrong length."""


class EmptyInput(FlagforgeError, ValueError):
    """An operation that needs at least one point received none."""


class GenericityFailure(FlagforgeError):
    """A random draw hit a degenerate configuration; retry with another seed."""

    def __init__(self, message: str, *, seed=None):
        super().__init__(message)
        self.seed = seed


class VerticalInput(FlagforgeError, ValueError):
    """A vertical plane (or a line only contained in vertical planes)."""


class NotOnPlane(FlagforgeError, ValueError):
    """A point that was required to lie on a plane does not."""


class CapExceeded(FlagforgeError):
    """A configured work cap would be exceeded."""


class InvalidFamily(FlagforgeError, ValueError):
    """A layered family violates its level invariants."""


class InvalidTuple(FlagforgeError, ValueError):
    """An exponent tuple violates the admissibility conditions."""


class ConstructionError(FlagforgeError, ValueError):
    """A generator received parameters outside its validity range."""


class InteractionDetected(ConstructionError):
    """Translated copies of a construction are not independent."""


class FitError(FlagforgeError, ValueError):
    """Not enough usable rows for a log-log fit."""
