"""Numba switch.

Hot kernels are written twice: a loop version compiled with ``numba.njit``
and a vectorised numpy/scipy version. Setting ``BLOWUP_CROSS_NO_NUMBA=1``
(or running without numba installed) selects the numpy path at import time.
"""

import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

ENV_FLAG = "BLOWUP_CROSS_NO_NUMBA"

_disabled = os.environ.get(ENV_FLAG, "").strip().lower() in ("1", "true", "yes", "on")
USE_NUMBA = numba is not None and not _disabled


def njit(fn):
    if numba is None:
        return fn
    return numba.njit(cache=True, nogil=True)(fn)
