"""GF(2) row reduction with the compiled kernel when available.

``BACKEND`` names the implementation selected at import time. Setting
``SHEAFLENS_PURE_PYTHON=1`` forces the pure-Python fallback.
"""

import os

from . import _gf2_py

rref_python = _gf2_py.rref

try:
    if os.environ.get("SHEAFLENS_PURE_PYTHON"):
        raise ImportError("pure Python requested")
    from ._gf2_ext import rref as rref_compiled
except ImportError:
    rref_compiled = None

if rref_compiled is not None:
    rref = rref_compiled
    BACKEND = "cython"
else:
    rref = rref_python
    BACKEND = "python"

__all__ = ["BACKEND", "rref", "rref_compiled", "rref_python"]
