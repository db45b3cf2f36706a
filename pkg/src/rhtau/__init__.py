"""Tau functions of matrix Riemann-Hilbert problems on nested circles.

Symbols are factored into elementary matrices, the factors are placed on
nested contours, and the tau function is the Fredholm determinant of the
resulting integrable kernel.  The Malgrange forms, Toeplitz sections and
Szego constant give independent checks.
"""

from .catalog import get_family, list_catalog
from .contour import ContourGrid
from .factor import FactorChain, assign_contours, factorize, lemma_factorize, sl2_factorize
from .iiks import build_system, explicit_triangular, fredholm_det, solve_theta
from .symbol import SymbolFamily

__version__ = "0.1.0"

__all__ = [
    "ContourGrid",
    "SymbolFamily",
    "FactorChain",
    "get_family",
    "list_catalog",
    "factorize",
    "lemma_factorize",
    "sl2_factorize",
    "assign_contours",
    "build_system",
    "fredholm_det",
    "solve_theta",
    "explicit_triangular",
]
