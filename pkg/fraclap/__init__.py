"""
fraclap: the integral fractional Laplacian, its 1D Dirichlet solver, and Besov regularity
measurements built on second-order difference quotients and K-functionals.
"""

__version__ = "0.1.0"

from .errors import FracLapError

__all__ = ["FracLapError", "__version__"]
