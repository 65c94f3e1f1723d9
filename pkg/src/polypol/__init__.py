"""Adjoint curves, canonical forms and trace tests for rational polypols."""

from .errors import DegenerateInputError, PolypolError, UnsupportedInputError

__version__ = "0.1.0"

__all__ = [
    "DegenerateInputError",
    "PolypolError",
    "UnsupportedInputError",
    "__version__",
]
