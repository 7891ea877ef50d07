"""Kernel backend selection.

``DFFRAME_BACKEND=numpy`` forces the vectorised numpy kernels;
``DFFRAME_BACKEND=numba`` (the default when numba imports) uses the
compiled loop kernels. The choice is read once at import time; use
:func:`use_backend` to switch at runtime (tests, benchmarks).
"""

import os

from . import kernels_numpy

try:
    from . import kernels_numba
except ImportError:  # pragma: no cover - numba is optional
    kernels_numba = None

_BACKENDS = {"numpy": kernels_numpy}
if kernels_numba is not None:
    _BACKENDS["numba"] = kernels_numba


def _default():
    name = os.environ.get("DFFRAME_BACKEND", "").strip().lower()
    if name:
        if name not in ("numpy", "numba"):
            raise ValueError(f"DFFRAME_BACKEND must be 'numpy' or 'numba', got {name!r}")
        if name not in _BACKENDS:
            raise ImportError("DFFRAME_BACKEND=numba but numba is not importable")
        return name
    return "numba" if "numba" in _BACKENDS else "numpy"


_active = _default()


def available():
    return sorted(_BACKENDS)


def active_name():
    return _active


def kernels():
    return _BACKENDS[_active]


def use_backend(name):
    """Switch the active kernel module; returns the previous backend name."""
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"unknown or unavailable backend {name!r}")
    previous, _active = _active, name
    return previous
