"""Pure-NumPy fallback for the hot kernels.

Mirrors the compiled extension in ``_core.pyx``: the hashing kernel is
bit-identical across backends (integer arithmetic plus exact float sums);
the floating-point kernels agree to rounding error.
"""

from __future__ import annotations

import numpy as np
from scipy.special import erf

_SQRT2 = np.sqrt(2.0)
_INV_SQRT_2PI = 1.0 / np.sqrt(2.0 * np.pi)

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def gelu(x):
    """Exact (erf-based) GELU, elementwise."""
    x = np.asarray(x, dtype=np.float64)
    return 0.5 * x * (1.0 + erf(x / _SQRT2))


def gelu_grad(x):
    """d/dx GELU(x) = Phi(x) + x * phi(x)."""
    x = np.asarray(x, dtype=np.float64)
    phi = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
    return 0.5 * (1.0 + erf(x / _SQRT2)) + x * phi


def softmax_xent(logits, labels):
    """Summed cross-entropy and its logit gradient for one task head.

    Returns ``(loss_sum, grad)`` where ``grad[i] = softmax(logits[i]) -
    onehot(labels[i])`` (not divided by the batch size; the caller scales).
    """
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    n = logits.shape[0]
    mx = logits.max(axis=1, keepdims=True)
    e = np.exp(logits - mx)
    s = e.sum(axis=1, keepdims=True)
    p = e / s
    rows = np.arange(n)
    loss = float(np.sum(np.log(s[:, 0]) - (logits[rows, labels] - mx[:, 0])))
    grad = p
    grad[rows, labels] -= 1.0
    return loss, grad


def w2sq_sorted(a, b):
    """Squared 2-Wasserstein between two uniform-weight empirical measures.

    Inputs must be ascending-sorted 1-D arrays. Unequal sizes use the
    quantile-function coupling over the merged quantile grid; breakpoints
    are compared in integer units of 1/(n*m) so the grid is exact.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n, m = a.shape[0], b.shape[0]
    if n == 0 or m == 0:
        raise ValueError("empty input")
    if n == m:
        d = a - b
        return float(np.mean(d * d))
    breaks_a = np.arange(1, n + 1, dtype=np.int64) * m
    breaks_b = np.arange(1, m + 1, dtype=np.int64) * n
    allb = np.union1d(breaks_a, breaks_b)
    widths = np.diff(np.concatenate(([0], allb))).astype(np.float64) / float(n * m)
    ia = np.searchsorted(breaks_a, allb, side="left")
    ib = np.searchsorted(breaks_b, allb, side="left")
    d = a[ia] - b[ib]
    return float(np.sum(widths * d * d))


def _fnv1a_update(h: int, data: bytes) -> int:
    for byte in data:
        h = ((h ^ byte) * FNV_PRIME) & _MASK64
    return h


def hash_features(tokens, dim, seed, use_bigrams=True):
    """Signed feature hashing of word 1-grams (and 2-grams when enabled).

    ``tokens`` is a list of ``bytes``. Each n-gram is FNV-1a hashed (seeded)
    to a bucket in [0, dim); a second hash bit gives a +/-1 contribution.
    Returns the unnormalized float64 accumulation vector.
    """
    vec = np.zeros(dim, dtype=np.float64)
    h0 = _fnv1a_update(FNV_OFFSET, int(seed).to_bytes(8, "little", signed=False))
    prev = None
    for tok in tokens:
        h = _fnv1a_update(h0, tok)
        hs = _fnv1a_update(h, b"#")
        vec[h % dim] += 1.0 if (hs & 1) else -1.0
        if use_bigrams and prev is not None:
            hb = _fnv1a_update(_fnv1a_update(prev, b" "), tok)
            hbs = _fnv1a_update(hb, b"#")
            vec[hb % dim] += 1.0 if (hbs & 1) else -1.0
        prev = h
    return vec
