"""Exception types shared across the library."""


class PolypolError(ValueError):
    """Base class for all domain errors raised by this package."""


class DegenerateInputError(PolypolError):
    """Input violates a geometric precondition (singular conic, zero poly, ...)."""


class UnsupportedInputError(PolypolError):
    """Input is valid but outside the supported scope (e.g. non-nodal curve)."""
