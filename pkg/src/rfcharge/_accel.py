"""Backend selection for the hot numeric kernels.

Set ``RFCHARGE_DISABLE_NUMBA=1`` before import to force the pure-numpy
path. The numba path is used whenever numba imports cleanly otherwise.
"""
import os

_FALSY = ("", "0", "false", "no", "off")

_disabled = os.environ.get("RFCHARGE_DISABLE_NUMBA", "0").strip().lower() not in _FALSY

try:
    if _disabled:
        raise ImportError("numba disabled via RFCHARGE_DISABLE_NUMBA")
    from numba import njit
    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        # bare @njit or @njit(...)
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]

        def deco(fn):
            return fn
        return deco


def backend():
    """Name of the default kernel backend: ``"numba"`` or ``"numpy"``."""
    return "numba" if HAVE_NUMBA else "numpy"
