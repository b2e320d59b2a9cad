"""Kernel backend selection.

Prefers the compiled extension (cal._kernels) when it imported cleanly; the
pure NumPy module (cal._kernels_py) is the always-available fallback.  Set
``CAL_FORCE_PURE=1`` to ignore the extension.  Both backends return
bit-for-bit identical results, so the choice affects speed and memory only.
"""

import os

from . import _kernels_py

_compiled = None
if not os.environ.get("CAL_FORCE_PURE"):
    try:
        from . import _kernels as _compiled  # type: ignore[no-redef]
    except ImportError:
        _compiled = None

_active = _compiled if _compiled is not None else _kernels_py

HAS_COMPILED = _compiled is not None
HALF_TOL = _kernels_py.HALF_TOL

subset_scan = _active.subset_scan
product_bfs = _active.product_bfs


def backend_name() -> str:
    return _active.BACKEND_NAME


def get_backend(name: str):
    """Fetch a backend module by name ("pure" or "compiled"); for benchmarks."""
    if name == "pure":
        return _kernels_py
    if name == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernels are not available")
        return _compiled
    raise ValueError(f"unknown backend {name!r}")
