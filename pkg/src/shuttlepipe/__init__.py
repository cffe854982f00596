"""Post-detection analytics for badminton match video.

Turns per-frame detector output and per-clip classifier output into
per-shot predictions, scores them, and accounts for model compute cost.
"""

from ._kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
