"""JIT switch.

``RENORM_NUMBA=0`` (or a missing numba install) selects the pure NumPy/Python
code paths; anything else compiles the hot kernels with ``numba.njit``.
The flag is read once at import time.
"""
import os

_flag = os.environ.get("RENORM_NUMBA", "1").strip().lower()
USE_NUMBA = _flag not in ("0", "false", "no", "off")

if USE_NUMBA:
    try:
        import numba as _nb
    except ImportError:  # pragma: no cover
        USE_NUMBA = False

if USE_NUMBA:
    def njit(fn):
        return _nb.njit(cache=True, nogil=True)(fn)
else:
    def njit(fn):
        return fn


def backend():
    return "numba" if USE_NUMBA else "numpy"
