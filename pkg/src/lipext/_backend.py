"""Pick the kernel implementation at import time.

The compiled extension is used when it imports; ``LIPEXT_PURE_PYTHON=1`` forces
the numpy fallback (useful for benchmarking and for checking the two agree).
"""

from __future__ import annotations

import os

if os.environ.get("LIPEXT_PURE_PYTHON", "") not in ("", "0"):
    from . import _pykernels as kernels
else:
    try:
        from . import _ckernels as kernels
    except ImportError:  # extension not built
        from . import _pykernels as kernels

BACKEND = kernels.BACKEND_NAME

__all__ = ["kernels", "BACKEND"]
