"""Kernel backend selection.

The compiled extension is used when it imports; set POLARGRASS_PURE=1 to
force the numpy fallback.
"""
from __future__ import annotations

import os

from . import _pykernels as pure

compiled = None
if os.environ.get("POLARGRASS_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as compiled  # type: ignore[no-redef]
    except ImportError:  # pragma: no cover - depends on build
        compiled = None

BACKEND = "compiled" if compiled is not None else "python"
_active = compiled if compiled is not None else pure


def get(backend: str | None = None):
    """Kernel module for the named backend ('compiled', 'python' or None for the default)."""
    if backend is None:
        return _active
    if backend == "python":
        return pure
    if backend == "compiled":
        if compiled is None:
            raise RuntimeError("compiled kernels are not available")
        return compiled
    raise ValueError(f"unknown backend {backend!r}")
