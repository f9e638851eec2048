"""Numba / pure-numpy backend switch for the hot kernels.

Environment flags:

* ``TECOORD_BACKEND`` -- ``auto`` (default), ``numba`` or ``numpy``.
  ``numpy`` skips jit compilation entirely and runs the vectorized
  fallback path; ``numba`` fails loudly if numba cannot be imported.
* ``TECOORD_THREADS`` -- caps the numba thread pool (0 or unset keeps
  numba's default). The current kernels are single-threaded, so this
  only matters if parallel kernels are added later.
"""

import os
import warnings

_choice = os.environ.get("TECOORD_BACKEND", "auto").strip().lower()
if _choice not in ("auto", "numba", "numpy"):
    warnings.warn(f"TECOORD_BACKEND={_choice!r} not recognized, using 'auto'")
    _choice = "auto"

NUMBA_ENABLED = False
if _choice != "numpy":
    try:
        import numba

        NUMBA_ENABLED = True
    except ImportError:
        if _choice == "numba":
            raise
        NUMBA_ENABLED = False

BACKEND = "numba" if NUMBA_ENABLED else "numpy"


def jit(func):
    """Compile ``func`` with numba when enabled, else return it unchanged.

    Kernels are written as numpy-vectorized code that is valid under both
    backends, so the numpy path is the same source running un-jitted.
    """
    if NUMBA_ENABLED:
        return numba.njit(cache=True)(func)
    return func


def _apply_thread_cap():
    raw = os.environ.get("TECOORD_THREADS", "").strip()
    if not raw or not NUMBA_ENABLED:
        return
    try:
        n = int(raw)
    except ValueError:
        warnings.warn(f"TECOORD_THREADS={raw!r} is not an integer, ignored")
        return
    if n > 0:
        try:
            numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
        except ValueError:
            pass


_apply_thread_cap()
