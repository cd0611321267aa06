"""Kernel backend selection.

The compiled extension is preferred when importable; set GSFIM_BACKEND to
"python" or "compiled" to force one, or call use_backend() at runtime.
"""

from __future__ import annotations

import os

from . import _pykernels

try:
    from . import _ckernels
except ImportError:
    _ckernels = None

_BY_NAME = {"python": _pykernels}
if _ckernels is not None:
    _BY_NAME["compiled"] = _ckernels


def _initial():
    forced = os.environ.get("GSFIM_BACKEND", "").strip().lower()
    if forced:
        if forced not in _BY_NAME:
            raise ImportError(
                f"GSFIM_BACKEND={forced!r} is not available; choices: {sorted(_BY_NAME)}"
            )
        return _BY_NAME[forced]
    return _ckernels if _ckernels is not None else _pykernels


_active = _initial()


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BY_NAME))


def active_backend() -> str:
    return "compiled" if _active is _ckernels else "python"


def use_backend(name: str) -> None:
    global _active
    if name not in _BY_NAME:
        raise ValueError(f"unknown backend {name!r}; choices: {sorted(_BY_NAME)}")
    _active = _BY_NAME[name]


def kernels():
    return _active
