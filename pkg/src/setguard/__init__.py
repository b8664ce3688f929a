"""Data-driven set-theoretic safety control toolkit."""

from .sets import HPolytope, MatrixZonotope, Zonotope

__version__ = "0.1.0"

__all__ = ["Zonotope", "HPolytope", "MatrixZonotope", "__version__"]
