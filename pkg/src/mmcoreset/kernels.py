"""Kernel backend selection: compiled extension when available, numpy fallback.

The active backend can be forced with the ``MMCORESET_BACKEND`` environment
variable (``cython`` or ``python``) or swapped at runtime via
:func:`set_backend`, which the benchmark and the parity tests use.
"""

from __future__ import annotations

import os
from types import ModuleType

from . import _kernels_py

try:
    from . import _kernels as _compiled  # type: ignore[attr-defined]
except ImportError:
    _compiled = None

_BACKENDS: dict[str, ModuleType | None] = {
    "cython": _compiled,
    "python": _kernels_py,
}

_active_name = "python"
_active: ModuleType = _kernels_py


def available_backends() -> list[str]:
    return [name for name, mod in _BACKENDS.items() if mod is not None]


def set_backend(name: str) -> None:
    """Select the kernel implementation; raises if it is not available."""
    global _active, _active_name
    mod = _BACKENDS.get(name)
    if mod is None:
        raise ValueError(f"kernel backend {name!r} is not available")
    _active = mod
    _active_name = name


def active_backend() -> str:
    return _active_name


def get_backend(name: str) -> ModuleType:
    mod = _BACKENDS.get(name)
    if mod is None:
        raise ValueError(f"kernel backend {name!r} is not available")
    return mod


def pool_totals(feats):
    return _active.pool_totals(feats)


def sqdist_accumulate(feats, sel, acc):
    return _active.sqdist_accumulate(feats, sel, acc)


def best_gain(accum, totals, alive):
    return _active.best_gain(accum, totals, alive)


def jacobi_eigh(mat):
    return _active.jacobi_eigh(mat)


_requested = os.environ.get("MMCORESET_BACKEND", "").strip().lower()
if _requested:
    set_backend(_requested)
elif _compiled is not None:
    set_backend("cython")
