"""Kernel backend selection: compiled extension if available, else pure Python.

Set NVSINGLET_BACKEND to "cy" or "py" to force a backend ("auto" default).
"""

from __future__ import annotations

import os

import numpy as np

from . import _kernel_py

_FORCED = os.environ.get("NVSINGLET_BACKEND", "auto").lower()

_cy = None
if _FORCED in ("auto", "cy"):
    try:
        from . import _kernel_cy as _cy  # type: ignore[attr-defined]
    except ImportError:
        _cy = None
        if _FORCED == "cy":
            raise ImportError(
                "NVSINGLET_BACKEND=cy but the compiled kernel is not built; "
                "reinstall with a C compiler or use NVSINGLET_BACKEND=py"
            )


def backend_name() -> str:
    return "cy" if (_cy is not None and _FORCED != "py") else "py"


def get_kernel(prefer: str | None = None):
    """Return the kernel module. ``prefer`` overrides the global choice."""
    choice = (prefer or backend_name()).lower()
    if choice == "cy":
        if _cy is None:
            raise ImportError("compiled kernel unavailable")
        return _cy
    return _kernel_py


def lower_terms(series) -> tuple[np.ndarray, np.ndarray]:
    """TermSeries -> (omegas[K], stacked matrices[K,n,n]) for the kernels."""
    n = series.layout.dim
    k = len(series.terms)
    omegas = np.empty(k)
    mats = np.empty((k, n, n), dtype=complex)
    for i, (w, m) in enumerate(series.terms):
        omegas[i] = w
        mats[i] = m
    return omegas, np.ascontiguousarray(mats)


def lower_ops(ops, n: int) -> np.ndarray:
    mats = np.empty((len(ops), n, n), dtype=complex)
    for i, op in enumerate(ops):
        mats[i] = op.matrix if hasattr(op, "matrix") else op
    return np.ascontiguousarray(mats)
