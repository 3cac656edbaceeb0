"""Select the rank-1 RLS kernel implementation at import time.

The compiled extension is preferred. Setting the environment variable
``PROEMLC_PURE_PYTHON=1`` forces the numpy fallback, as does a missing build.
"""

import os

from . import _fallback

BACKEND = "python"

if not os.environ.get("PROEMLC_PURE_PYTHON"):
    try:
        from ._kernels import rank1_sweep, rank1_update

        BACKEND = "cython"
    except ImportError:
        pass

if BACKEND == "python":
    rank1_update = _fallback.rank1_update
    rank1_sweep = _fallback.rank1_sweep

__all__ = ["BACKEND", "rank1_sweep", "rank1_update"]
