"""Kernel backend selection: numba JIT by default, pure Python on demand.

Set ``SFFCC_NUMBA=0`` in the environment (before import) to run every hot
kernel as plain Python/NumPy.  Both paths execute the same source, consume
the same random stream and therefore produce bit-identical results; the
``bench`` CLI subcommand times one against the other.
"""

from __future__ import annotations

import os

USE_NUMBA = os.environ.get("SFFCC_NUMBA", "1").strip().lower() not in ("0", "false", "no")

if USE_NUMBA:
    from numba import njit as _njit

    def jit(func):
        return _njit(cache=True)(func)

    def jit_rng(func):
        # explicit signature keeps the stream state unsigned: without it the
        # right shifts would sign-extend and the two backends would diverge
        return _njit("Tuple((uint64, float64))(uint64)", cache=True)(func)

else:

    def jit(func):
        return func

    def jit_rng(func):
        return func


def python_impl(func):
    """Return the pure-Python implementation behind a (possibly) jitted kernel."""
    return getattr(func, "py_func", func)
