"""Finite-element solver for bulk-surface hyperelasticity with surface-polyconvex energies."""
from . import bulk, errors, surface, tensor

__version__ = "0.1.0"

__all__ = ["bulk", "errors", "surface", "tensor", "__version__"]
