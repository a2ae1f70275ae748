"""Kernel backend selection.

The compiled ``_native`` extension is used when it was built; otherwise the
NumPy implementation in ``_kernels_py`` is used. Setting the environment
variable ``BORELL_LAB_BACKEND=python`` forces the fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py

_native = None
if os.environ.get("BORELL_LAB_BACKEND", "").lower() != "python":
    try:
        from . import _native  # type: ignore[no-redef]
    except ImportError:  # extension not built
        _native = None

BACKEND = "native" if _native is not None else "python"
_impl = _native if _native is not None else _kernels_py


def smooth_u_1d(code, params, t, x, sx=1.0, su=1.0):
    return _impl.smooth_u_1d(code, params, t, x, sx, su)


def backend_module(name: str):
    """Return the kernel module for ``"native"`` or ``"python"`` (for benchmarks and parity tests)."""
    if name == "python":
        return _kernels_py
    if name == "native":
        if _native is None:
            raise ImportError("the compiled extension is not available")
        return _native
    raise ValueError(f"unknown backend {name!r}")
