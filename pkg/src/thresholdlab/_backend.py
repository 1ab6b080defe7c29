"""Selection between numba-compiled kernels and the pure-numpy fallback.

Set ``THRESHOLDLAB_DISABLE_NUMBA=1`` in the environment before import to force
the numpy path, or call :func:`set_backend` at runtime.
"""
import os

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

_FLAG = os.environ.get("THRESHOLDLAB_DISABLE_NUMBA", "").strip().lower()
_use_numba = HAVE_NUMBA and _FLAG not in ("1", "true", "yes", "on")


def njit(func):
    """Compile ``func`` with numba when available, else return it unchanged."""
    if not HAVE_NUMBA:
        return func
    return numba.njit(cache=True)(func)


def use_numba():
    return _use_numba


def set_backend(name):
    """Switch kernels between ``"numba"`` and ``"numpy"``."""
    global _use_numba
    if name == "numba":
        if not HAVE_NUMBA:
            raise RuntimeError("numba is not installed")
        _use_numba = True
    elif name == "numpy":
        _use_numba = False
    else:
        raise ValueError(f"unknown backend {name!r}")


def backend():
    return "numba" if _use_numba else "numpy"
