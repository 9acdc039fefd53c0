"""Kernel backend selection.

The compiled extension is preferred; set BLOCKLP_PURE=1 to force the numpy
fallback (useful for debugging and for the kernel benchmark).
"""

import os

from . import _kernels_py

if os.environ.get("BLOCKLP_PURE", "0") == "1":
    kernels = _kernels_py
    COMPILED = False
else:
    try:
        from . import _kernels as _kernels_c

        kernels = _kernels_c
        COMPILED = True
    except ImportError:
        kernels = _kernels_py
        COMPILED = False
