"""Kernel selection: the compiled extension when importable, numpy otherwise.

Set KANSKEW_PURE=1 to force the numpy kernels.
"""

import os

from . import _pykernels

BACKEND = "python"
skew_averages = _pykernels.skew_averages

if os.environ.get("KANSKEW_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels
    except ImportError:  # extension not built
        _ckernels = None
    if _ckernels is not None:
        BACKEND = "cython"
        skew_averages = _ckernels.skew_averages
