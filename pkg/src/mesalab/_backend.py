"""Kernel selection: the compiled extension when importable, numpy otherwise."""
from __future__ import annotations

import logging

from . import _pykernels

log = logging.getLogger(__name__)

try:
    from . import _ckernels
except ImportError:  # extension not built
    _ckernels = None

_active = "cython" if _ckernels is not None else "python"


def available() -> list[str]:
    return ["cython", "python"] if _ckernels is not None else ["python"]


def current() -> str:
    return _active


def set_backend(name: str) -> None:
    """Select ``"cython"`` or ``"python"`` for subsequent runs."""
    global _active
    if name not in ("cython", "python"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "cython" and _ckernels is None:
        raise ImportError("compiled kernels are not built")
    _active = name


def get_advance(name: str | None = None):
    name = name or _active
    if name == "cython":
        return _ckernels.advance
    return _pykernels.advance
