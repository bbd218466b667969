"""Per-motion-segment pathology severity extraction for cervical-spine
reports: deterministic segmenter, hashed text features, a shared-trunk
multi-task classifier with adapter variants, sliced-Wasserstein task
similarity, and evaluation/benchmark harnesses.
"""

from spinemtl._kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
