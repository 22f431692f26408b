"""Computational laboratory for Plateau's problem on explicit boundary configurations."""

__version__ = "0.1.0"

from .complex_core import (CellMeasures, Chain, ChainError, ComplexError, SimplicialComplex,
                           boundary, mass, push_forward, size)
from .kernels import BACKEND

__all__ = ["BACKEND", "CellMeasures", "Chain", "ChainError", "ComplexError", "SimplicialComplex",
           "__version__", "boundary", "mass", "push_forward", "size"]
