"""Backend selection for the integration kernels.

The compiled extension is used when importable; ``COCYCLE_LAB_PURE=1`` forces the
pure-Python fallback.  ``BACKEND`` names whichever one is active.
"""
from __future__ import annotations

import os

from . import _pykernels

PURE = _pykernels

if os.environ.get("COCYCLE_LAB_PURE", "") not in ("", "0"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

COMPILED = _impl if BACKEND == "cython" else None

matrix_blocks = _impl.matrix_blocks
vector_blocks = _impl.vector_blocks
rotation = _impl.rotation
