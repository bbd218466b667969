# cython: language_level=3
"""Compiled hot kernels: GELU, softmax cross-entropy, 1-D quantile-coupling
transport cost, and signed n-gram hashing.

Semantics match ``_pure.py``: hashing is bit-identical (integer arithmetic,
exact float sums); the floating-point kernels agree to rounding error.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport erf, exp, log, sqrt

cnp.import_array()

cdef double SQRT2 = sqrt(2.0)
cdef double INV_SQRT_2PI = 0.3989422804014326779399460599343818684759
cdef unsigned long long FNV_OFFSET = 0xCBF29CE484222325ULL
cdef unsigned long long FNV_PRIME = 0x100000001B3ULL


def gelu(x):
    """Exact (erf-based) GELU, elementwise."""
    cdef cnp.ndarray arr = np.ascontiguousarray(x, dtype=np.float64)
    cdef cnp.ndarray out = np.empty_like(arr)
    cdef double[::1] xv = arr.ravel()
    cdef double[::1] ov = out.ravel()
    cdef Py_ssize_t i, n = xv.shape[0]
    cdef double v
    for i in range(n):
        v = xv[i]
        ov[i] = 0.5 * v * (1.0 + erf(v / SQRT2))
    return out


def gelu_grad(x):
    """d/dx GELU(x) = Phi(x) + x * phi(x)."""
    cdef cnp.ndarray arr = np.ascontiguousarray(x, dtype=np.float64)
    cdef cnp.ndarray out = np.empty_like(arr)
    cdef double[::1] xv = arr.ravel()
    cdef double[::1] ov = out.ravel()
    cdef Py_ssize_t i, n = xv.shape[0]
    cdef double v
    for i in range(n):
        v = xv[i]
        ov[i] = 0.5 * (1.0 + erf(v / SQRT2)) + v * INV_SQRT_2PI * exp(-0.5 * v * v)
    return out


def softmax_xent(logits, labels):
    """Summed cross-entropy and its logit gradient for one task head.

    Returns ``(loss_sum, grad)`` with ``grad[i] = softmax(logits[i]) -
    onehot(labels[i])`` (unscaled; the caller divides by the batch size).
    """
    cdef cnp.ndarray larr = np.ascontiguousarray(logits, dtype=np.float64)
    cdef cnp.ndarray yarr = np.ascontiguousarray(labels, dtype=np.int64)
    cdef cnp.ndarray grad = np.empty_like(larr)
    cdef double[:, ::1] lv = larr
    cdef double[:, ::1] gv = grad
    cdef long long[::1] yv = yarr
    cdef Py_ssize_t i, j, n = lv.shape[0], k = lv.shape[1]
    cdef double mx, s, loss = 0.0
    cdef long long y
    for i in range(n):
        mx = lv[i, 0]
        for j in range(1, k):
            if lv[i, j] > mx:
                mx = lv[i, j]
        s = 0.0
        for j in range(k):
            gv[i, j] = exp(lv[i, j] - mx)
            s += gv[i, j]
        y = yv[i]
        loss += log(s) - (lv[i, y] - mx)
        for j in range(k):
            gv[i, j] /= s
        gv[i, y] -= 1.0
    return loss, grad


def w2sq_sorted(a, b):
    """Squared 2-Wasserstein between two uniform-weight empirical measures.

    Inputs must be ascending-sorted 1-D arrays; unequal sizes use the
    quantile-function coupling, with breakpoints compared in exact integer
    units of 1/(n*m).
    """
    cdef cnp.ndarray aarr = np.ascontiguousarray(a, dtype=np.float64)
    cdef cnp.ndarray barr = np.ascontiguousarray(b, dtype=np.float64)
    cdef double[::1] av = aarr
    cdef double[::1] bv = barr
    cdef Py_ssize_t n = av.shape[0], m = bv.shape[0]
    if n == 0 or m == 0:
        raise ValueError("empty input")
    cdef Py_ssize_t i = 0, j = 0
    cdef double total = 0.0, d, scale = 1.0 / (<double> n * <double> m)
    cdef long long q_prev = 0, qa, qb, q
    while i < n and j < m:
        qa = (<long long> (i + 1)) * m
        qb = (<long long> (j + 1)) * n
        q = qa if qa < qb else qb
        d = av[i] - bv[j]
        total += (<double> (q - q_prev)) * d * d
        q_prev = q
        if qa == q:
            i += 1
        if qb == q:
            j += 1
    return total * scale


def hash_features(tokens, Py_ssize_t dim, seed, bint use_bigrams=True):
    """Signed feature hashing of word 1-grams (and 2-grams when enabled).

    ``tokens`` is a list of ``bytes``. Identical output to the pure backend.
    """
    cdef cnp.ndarray vec = np.zeros(dim, dtype=np.float64)
    cdef double[::1] vv = vec
    cdef unsigned long long h0 = FNV_OFFSET, h, hs, hb, prev = 0
    cdef bytes tok
    cdef const unsigned char* p
    cdef Py_ssize_t ti, bi, blen
    cdef bint have_prev = False
    cdef bytes seed_bytes = int(seed).to_bytes(8, "little", signed=False)
    p = seed_bytes
    for bi in range(8):
        h0 = (h0 ^ p[bi]) * FNV_PRIME
    for ti in range(len(tokens)):
        tok = tokens[ti]
        p = tok
        blen = len(tok)
        h = h0
        for bi in range(blen):
            h = (h ^ p[bi]) * FNV_PRIME
        hs = (h ^ 0x23) * FNV_PRIME  # '#'
        vv[<Py_ssize_t> (h % <unsigned long long> dim)] += 1.0 if (hs & 1) else -1.0
        if use_bigrams and have_prev:
            hb = (prev ^ 0x20) * FNV_PRIME  # ' '
            for bi in range(blen):
                hb = (hb ^ p[bi]) * FNV_PRIME
            hs = (hb ^ 0x23) * FNV_PRIME
            vv[<Py_ssize_t> (hb % <unsigned long long> dim)] += 1.0 if (hs & 1) else -1.0
        prev = h
        have_prev = True
    return vec
