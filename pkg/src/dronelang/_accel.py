"""Numba acceleration switch for the numeric kernels.

Hot loops (grid search, power integration) ship in two builds: a numba
@njit build and the plain interpreter/numpy build. Selection is made once
at import from the DRONELANG_NUMBA environment variable ("0"/"off" forces
the fallback). `benchmarks/bench_kernels.py` times both builds side by side.
"""

from __future__ import annotations

import os

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    njit = None
    HAVE_NUMBA = False


def _flag_enabled() -> bool:
    raw = os.environ.get("DRONELANG_NUMBA", "1").strip().lower()
    return raw not in ("0", "off", "false", "no")


NUMBA_ENABLED = HAVE_NUMBA and _flag_enabled()


def jit_kernel(func):
    """Compile `func` with numba when enabled, otherwise return it unchanged."""
    if NUMBA_ENABLED:
        return njit(cache=True)(func)
    return func


def compile_kernel(func):
    """Always-compiled build of `func` (None when numba is unavailable).

    Used by the kernel benchmark to compare both builds in one process.
    """
    if HAVE_NUMBA:
        return njit(cache=True)(func)
    return None


def active_mode() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"
