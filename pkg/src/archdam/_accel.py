"""Backend switch for the hot numeric kernels.

Every kernel in :mod:`archdam.kernels` ships twice: a numba ``@njit`` loop
version and a vectorised pure-numpy version. ``ARCHDAM_NUMBA=0`` (or a
missing numba install) selects numpy; the choice can also be flipped at
runtime with :func:`set_backend`.
"""

from __future__ import annotations

import os

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

_FALSY = {"0", "false", "no", "off", ""}

_backend = "numba" if HAVE_NUMBA and os.environ.get("ARCHDAM_NUMBA", "1").strip().lower() not in _FALSY else "numpy"


def njit(func):
    """``numba.njit(cache=True)`` when numba is importable, identity otherwise."""
    if HAVE_NUMBA:
        return numba.njit(cache=True)(func)
    return func


def backend() -> str:
    return _backend


def set_backend(name: str) -> str:
    """Select ``"numba"`` or ``"numpy"``; returns the previous backend."""
    global _backend
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    previous, _backend = _backend, name
    return previous
