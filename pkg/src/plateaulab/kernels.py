"""Kernel dispatch: the compiled extension when importable, numpy otherwise.

Set PLATEAULAB_PURE=1 to force the numpy versions.
"""

from __future__ import annotations

import os

from . import _pykernels

BACKEND = "python"
if os.environ.get("PLATEAULAB_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
else:
    _impl = _pykernels

tri_area_grad = _impl.tri_area_grad
douglas_pairs = _impl.douglas_pairs
