"""Backend selection for the hot kernels.

Numba is used when importable unless ``MGMODES_DISABLE_NUMBA`` is set to a
truthy value, in which case every kernel runs its pure-numpy twin.
``MGMODES_THREADS`` caps the numba worker pool.
"""
from __future__ import annotations

import os

_FALSY = {"", "0", "false", "no", "off"}


def _env_flag(name: str) -> bool:
    return os.environ.get(name, "").strip().lower() not in _FALSY


try:
    import numba

    NUMBA_AVAILABLE = True
    if "NUMBA_THREADING_LAYER" not in os.environ:
        # the bundled TBB is too old and only produces a warning when probed
        numba.config.THREADING_LAYER = "omp"
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    NUMBA_AVAILABLE = False

USE_NUMBA = NUMBA_AVAILABLE and not _env_flag("MGMODES_DISABLE_NUMBA")


def _apply_thread_cap() -> None:
    if not USE_NUMBA:
        return
    raw = os.environ.get("MGMODES_THREADS", "").strip()
    if not raw:
        return
    try:
        requested = int(raw)
    except ValueError:
        return
    if requested >= 1:
        numba.set_num_threads(min(requested, numba.config.NUMBA_NUM_THREADS))


_apply_thread_cap()


def jit(parallel: bool = False):
    """``numba.njit`` with caching, or the identity when numba is off."""

    def wrap(func):
        if not NUMBA_AVAILABLE:
            return func
        return numba.njit(cache=True, parallel=parallel)(func)

    return wrap


if NUMBA_AVAILABLE:
    prange = numba.prange
else:  # pragma: no cover
    prange = range


def backend_name() -> str:
    return "numba" if USE_NUMBA else "numpy"


def thread_count() -> int:
    return numba.get_num_threads() if USE_NUMBA else 1
