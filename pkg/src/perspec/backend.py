"""Backend selection for the hot integration kernels.

The adaptive stepper in ``_stepper`` dominates runtime (eigenvalue scans
evaluate it thousands of times).  By default it is compiled with numba's
``@njit``; setting the environment variable ``PERSPEC_DISABLE_NUMBA=1``
(or any of ``true``/``yes``/``on``) before import selects the pure
numpy/Python fallback, which runs the identical source uncompiled.  The
fallback is also chosen automatically when numba is not importable.

``benchmarks/bench_backends.py`` times the same workload under both.
"""

import os

_FALSEY = {"", "0", "false", "no", "off"}

NUMBA_DISABLED = os.environ.get("PERSPEC_DISABLE_NUMBA", "").strip().lower() not in _FALSEY

_numba = None
if not NUMBA_DISABLED:
    try:
        import numba as _numba
    except ImportError:
        _numba = None

BACKEND = "numba" if _numba is not None else "numpy"


def maybe_njit(*args, **kwargs):
    """``numba.njit`` when the numba backend is active, identity otherwise."""
    if _numba is not None:
        return _numba.njit(*args, **kwargs)

    def passthrough(fn):
        return fn

    return passthrough


def using_numba():
    return _numba is not None
