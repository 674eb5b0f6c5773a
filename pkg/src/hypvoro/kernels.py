"""Kernel dispatch: the compiled extension when available, else pure Python.

Set HYPVORO_PURE=1 to force the pure-Python kernels.
"""
from __future__ import annotations

import os

from . import _pykernels

ENV_PURE = "HYPVORO_PURE"

if os.environ.get(ENV_PURE, "") not in ("", "0"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]
        BACKEND = "compiled"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

bfs = _impl.bfs
expansion_scan = _impl.expansion_scan
walk = _impl.walk
