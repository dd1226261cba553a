"""Picks the kernel implementation at import time.

The compiled extension is used when it was built; set ``SUBDOPPLER_PURE=1``
to force the numpy fallback.
"""
import os

from . import _kernels_py

if os.environ.get("SUBDOPPLER_PURE", "") not in ("", "0"):
    kernels = _kernels_py
    BACKEND = "numpy"
else:
    try:
        from . import _kernels as kernels  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        kernels = _kernels_py
        BACKEND = "numpy"

__all__ = ["kernels", "BACKEND"]
