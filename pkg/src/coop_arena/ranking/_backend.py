"""Pick the compiled kernels when available; ``COOP_ARENA_PURE_PYTHON=1`` forces the fallback."""
from __future__ import annotations

import os

if os.environ.get("COOP_ARENA_PURE_PYTHON") == "1":
    from . import _pykernels as kernels

    BACKEND = "python"
else:
    try:
        from . import _kernels as kernels  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        from . import _pykernels as kernels

        BACKEND = "python"

__all__ = ["BACKEND", "kernels"]
