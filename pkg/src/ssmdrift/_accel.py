"""Kernel compilation switch.

Hot numeric kernels are written once as plain Python over scalars and
float64 arrays, then compiled with numba when available.  Setting the
environment variable ``SSMDRIFT_NUMBA=0`` (before import) selects the
uncompiled pure-Python/NumPy path; the same happens automatically when
numba is not installed.  ``benchmarks/bench_kernels.py`` times both paths.
"""

from __future__ import annotations

import os


def _flag_enabled() -> bool:
    raw = os.environ.get("SSMDRIFT_NUMBA", "1").strip().lower()
    return raw not in ("0", "false", "off", "no")


NUMBA_ENABLED = False
if _flag_enabled():
    try:
        from numba import njit as _njit

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        NUMBA_ENABLED = False


def jit_kernel(fn):
    """Compile ``fn`` as a nopython kernel, or return it unchanged.

    fastmath stays off: the acceptance tolerances (1e-12 .. 1e-14) rely on
    IEEE-faithful arithmetic, and results must be bit-reproducible across
    both paths.
    """
    if NUMBA_ENABLED:
        return _njit(cache=True, fastmath=False)(fn)
    return fn
