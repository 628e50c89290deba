"""Selection between numba-compiled kernels and the plain numpy path.

The switch is read once at import time from ``KSLAB_NUMBA``. Any of
``0``, ``false``, ``no``, ``off`` disables compilation; numba missing from
the environment has the same effect.
"""
from __future__ import annotations

import os

_OFF = {"0", "false", "no", "off"}

try:
    import numba

    NUMBA_AVAILABLE = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    NUMBA_AVAILABLE = False

USE_NUMBA = NUMBA_AVAILABLE and os.environ.get("KSLAB_NUMBA", "1").strip().lower() not in _OFF


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity decorator otherwise."""
    if NUMBA_AVAILABLE:
        return numba.njit(*args, **kwargs)

    def decorator(func):
        return func

    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return decorator


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"


def max_threads() -> int:
    """Concurrency cap from ``KSLAB_THREADS`` (default: CPU count)."""
    raw = os.environ.get("KSLAB_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = os.cpu_count() or 1
    return max(1, n)
