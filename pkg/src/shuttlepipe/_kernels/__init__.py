"""Sliding-window kernels, compiled when available.

The Cython build is picked at import time. Set ``SHUTTLEPIPE_PURE=1`` to force
the pure-Python implementation.
"""

import os

from . import _pure

BACKEND = "python"
jump_mask = _pure.jump_mask
mode_filter = _pure.mode_filter

if os.environ.get("SHUTTLEPIPE_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _fast
    except ImportError:
        pass
    else:
        BACKEND = "cython"
        jump_mask = _fast.jump_mask
        mode_filter = _fast.mode_filter

__all__ = ["BACKEND", "jump_mask", "mode_filter"]
