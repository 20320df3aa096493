"""Backend selection for the hot kernels.

Prefers the compiled extension, falls back to pure numpy, and honors
PLMIRELAX_PURE=1 to force the fallback (useful for benchmarks and for
environments without a C toolchain).  Blocks larger than the compiled
eigenvalue kernel supports are routed to the fallback transparently.
"""
from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("PLMIRELAX_PURE") == "1":
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        _impl = _kernels_py

BACKEND = _impl.BACKEND_NAME
MAX_COMPILED_N = _kernels_py.MAX_COMPILED_N

compositions = _kernels_py.compositions
composition_count = _kernels_py.composition_count


def grid_worst(phi, m: int, backend: str | None = None):
    """(worst_value, worst_counts, points_checked) over the order-m grid."""
    impl = _pick(backend)
    if impl is not _kernels_py and phi.shape[2] > MAX_COMPILED_N:
        impl = _kernels_py
    return impl.grid_worst(phi, m)


def simulate_dwell(A, B, K, schedule, x0, dt: float, steps: int, backend: str | None = None):
    """States at dwell boundaries for the switched closed loop."""
    return _pick(backend).simulate_dwell(A, B, K, schedule, x0, dt, steps)


def _pick(backend: str | None):
    if backend is None:
        return _impl
    if backend == "python":
        return _kernels_py
    if backend == "compiled":
        if _impl is _kernels_py:
            raise RuntimeError("compiled backend requested but not available")
        return _impl
    raise ValueError(f"unknown backend {backend!r}")
