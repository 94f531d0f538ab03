"""Numba toggle.

Kernels are written twice: an ``@njit`` loop version and a vectorised numpy
version. ``ISAC_WEATHER_NUMBA=0`` (or a missing numba install) selects numpy.
"""

import os

try:
    import numba
except ImportError:  # pragma: no cover
    numba = None

HAS_NUMBA = numba is not None
USE_NUMBA = HAS_NUMBA and os.environ.get("ISAC_WEATHER_NUMBA", "1").strip().lower() not in (
    "0",
    "false",
    "no",
    "off",
)


def njit(func):
    """Compile ``func`` in nopython mode when numba is importable, else return it as is."""
    if not HAS_NUMBA:
        return func
    return numba.njit(cache=True, nogil=True)(func)


def backend() -> str:
    return "numba" if USE_NUMBA else "numpy"
