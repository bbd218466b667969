"""Numeric kernel backend selection.

The compiled Cython extension is preferred when importable; the pure-NumPy
fallback is selected otherwise. ``SPINEMTL_BACKEND=python|compiled`` forces
a backend (``compiled`` raises if the extension is missing). The active
choice is exposed as :data:`BACKEND`.
"""

from __future__ import annotations

import os

from . import _pure

_requested = os.environ.get("SPINEMTL_BACKEND", "").strip().lower()
if _requested not in ("", "auto", "python", "compiled"):
    raise RuntimeError(
        f"SPINEMTL_BACKEND must be 'python' or 'compiled', got {_requested!r}"
    )

if _requested == "python":
    _impl = _pure
    BACKEND = "python"
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]

        BACKEND = "compiled"
    except ImportError:
        if _requested == "compiled":
            raise
        _impl = _pure
        BACKEND = "python"

gelu = _impl.gelu
gelu_grad = _impl.gelu_grad
softmax_xent = _impl.softmax_xent
w2sq_sorted = _impl.w2sq_sorted
hash_features = _impl.hash_features

__all__ = [
    "BACKEND",
    "gelu",
    "gelu_grad",
    "softmax_xent",
    "w2sq_sorted",
    "hash_features",
]
