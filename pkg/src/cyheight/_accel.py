"""Backend switch for the hot kernels.

Set ``CYHEIGHT_NO_NUMBA=1`` to force the pure-numpy code paths (useful for
debugging and for the benchmark comparison).
"""
from __future__ import annotations

import functools
import os

USE_NUMBA = os.environ.get("CYHEIGHT_NO_NUMBA", "").strip() not in ("1", "true", "yes")

if USE_NUMBA:
    try:
        import numba as nb
    except ImportError:  # pragma: no cover
        USE_NUMBA = False

if USE_NUMBA:
    njit = functools.partial(nb.njit, cache=True, nogil=True)
else:
    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda fn: fn


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
