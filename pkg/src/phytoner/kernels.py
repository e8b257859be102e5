"""Training kernel selection: compiled extension when built, numpy otherwise.

The two implementations share one contract (see ``_kernels_py.train_epoch``).
They are not bit-identical -- operation order differs -- but agree to well
below the 1e-6 tolerance the training contract allows across platforms.
"""

from __future__ import annotations

from . import _kernels_py

try:
    from . import _kernels_cy
except ImportError:
    _kernels_cy = None

_KERNELS = {"python": _kernels_py}
if _kernels_cy is not None:
    _KERNELS["compiled"] = _kernels_cy

_active = "compiled" if _kernels_cy is not None else "python"


def available_kernels() -> tuple[str, ...]:
    return tuple(sorted(_KERNELS))


def active_kernel() -> str:
    return _active


def use_kernel(name: str) -> str:
    """Select the kernel ("python", "compiled" or "auto"); returns the choice."""
    global _active
    if name == "auto":
        _active = "compiled" if _kernels_cy is not None else "python"
    elif name in _KERNELS:
        _active = name
    else:
        raise ValueError(f"unknown kernel {name!r}, have {available_kernels()}")
    return _active


def train_epoch(*args):
    return _KERNELS[_active].train_epoch(*args)
