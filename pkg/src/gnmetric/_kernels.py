"""Batched n-ary distance kernels.

Two interchangeable implementations are provided: numba-compiled loops and a
pure-numpy path. Both accumulate in the same order, so they agree bit for bit.
Set ``GNMETRIC_DISABLE_NUMBA=1`` to force the numpy path.
"""
from __future__ import annotations

import os

import numpy as np

MAX_PAIRWISE = 0
SUM_PAIRWISE = 1
CYCLIC_MAX = 2
CYCLIC_PERIMETER_AVG = 3

EUCLIDEAN = 0
CHEBYSHEV = 1
ABSOLUTE = 2

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAS_NUMBA = False

_DISABLED = os.environ.get("GNMETRIC_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes")
USE_NUMBA = HAS_NUMBA and not _DISABLED
BACKEND = "numba" if USE_NUMBA else "numpy"


# --------------------------------------------------------------------------
# pure numpy
# --------------------------------------------------------------------------

def _reduce_numpy(dist, n, kind, size):
    """``dist(r, s)`` returns the (size,) vector of base distances."""
    if kind == MAX_PAIRWISE:
        out = np.zeros(size)
        for r in range(n):
            for s in range(n):
                if r != s:
                    np.maximum(out, dist(r, s), out=out)
        return out
    if kind == SUM_PAIRWISE:
        out = np.zeros(size)
        for r in range(n):
            for s in range(n):
                if r != s:
                    out += dist(r, s)
        return out
    if kind == CYCLIC_MAX:
        out = np.zeros(size)
        for r in range(n):
            np.maximum(out, dist(r, (r + 1) % n), out=out)
        return out
    if kind == CYCLIC_PERIMETER_AVG:
        out = np.zeros(size)
        for r in range(n):
            out += dist(r, (r + 1) % n)
        return out / n
    raise ValueError(f"unknown kernel kind {kind}")


def finite_eval_numpy(base, idx, kind):
    idx = np.asarray(idx, dtype=np.int64)
    size, n = idx.shape
    return _reduce_numpy(lambda r, s: base[idx[:, r], idx[:, s]], n, kind, size)


def _vector_dist_numpy(a, b, norm):
    if norm == ABSOLUTE:
        return np.abs(a[:, 0] - b[:, 0])
    if norm == CHEBYSHEV:
        out = np.zeros(a.shape[0])
        for k in range(a.shape[1]):
            np.maximum(out, np.abs(a[:, k] - b[:, k]), out=out)
        return out
    acc = np.zeros(a.shape[0])
    for k in range(a.shape[1]):
        diff = a[:, k] - b[:, k]
        acc += diff * diff
    return np.sqrt(acc)


def vector_eval_numpy(pts, kind, norm):
    pts = np.asarray(pts, dtype=np.float64)
    size, n, _ = pts.shape
    return _reduce_numpy(lambda r, s: _vector_dist_numpy(pts[:, r], pts[:, s], norm), n, kind, size)


# --------------------------------------------------------------------------
# numba
# --------------------------------------------------------------------------

if HAS_NUMBA:

    @njit(cache=True)
    def _vdist(pts, i, r, s, norm):
        # scalar indexing: slicing rows here costs more than the arithmetic
        dim = pts.shape[2]
        if norm == ABSOLUTE:
            return abs(pts[i, r, 0] - pts[i, s, 0])
        if norm == CHEBYSHEV:
            m = 0.0
            for k in range(dim):
                v = abs(pts[i, r, k] - pts[i, s, k])
                if v > m:
                    m = v
            return m
        acc = 0.0
        for k in range(dim):
            diff = pts[i, r, k] - pts[i, s, k]
            acc += diff * diff
        return np.sqrt(acc)

    @njit(cache=True)
    def _finite_eval_nb(base, idx, kind):
        size, n = idx.shape
        out = np.empty(size)
        for i in range(size):
            row = idx[i]
            acc = 0.0
            if kind == MAX_PAIRWISE:
                for r in range(n):
                    for s in range(n):
                        if r != s:
                            v = base[row[r], row[s]]
                            if v > acc:
                                acc = v
            elif kind == SUM_PAIRWISE:
                for r in range(n):
                    for s in range(n):
                        if r != s:
                            acc += base[row[r], row[s]]
            elif kind == CYCLIC_MAX:
                for r in range(n):
                    v = base[row[r], row[(r + 1) % n]]
                    if v > acc:
                        acc = v
            else:
                for r in range(n):
                    acc += base[row[r], row[(r + 1) % n]]
                acc = acc / n
            out[i] = acc
        return out

    @njit(cache=True)
    def _vector_eval_nb(pts, kind, norm):
        size, n, _ = pts.shape
        out = np.empty(size)
        for i in range(size):
            acc = 0.0
            if kind == MAX_PAIRWISE:
                for r in range(n):
                    for s in range(n):
                        if r != s:
                            v = _vdist(pts, i, r, s, norm)
                            if v > acc:
                                acc = v
            elif kind == SUM_PAIRWISE:
                for r in range(n):
                    for s in range(n):
                        if r != s:
                            acc += _vdist(pts, i, r, s, norm)
            elif kind == CYCLIC_MAX:
                for r in range(n):
                    v = _vdist(pts, i, r, (r + 1) % n, norm)
                    if v > acc:
                        acc = v
            else:
                for r in range(n):
                    acc += _vdist(pts, i, r, (r + 1) % n, norm)
                acc = acc / n
            out[i] = acc
        return out

    def finite_eval_numba(base, idx, kind):
        return _finite_eval_nb(
            np.ascontiguousarray(base, dtype=np.float64),
            np.ascontiguousarray(idx, dtype=np.int64),
            int(kind),
        )

    def vector_eval_numba(pts, kind, norm):
        return _vector_eval_nb(np.ascontiguousarray(pts, dtype=np.float64), int(kind), int(norm))

else:  # pragma: no cover
    finite_eval_numba = finite_eval_numpy
    vector_eval_numba = vector_eval_numpy


# below this many tuples the numpy path wins and avoids a first-call compile
SMALL_BATCH = 64


def finite_eval(base, idx, kind):
    if USE_NUMBA and len(idx) >= SMALL_BATCH:
        return finite_eval_numba(base, idx, kind)
    return finite_eval_numpy(base, idx, kind)


def vector_eval(pts, kind, norm):
    if USE_NUMBA and len(pts) >= SMALL_BATCH:
        return vector_eval_numba(pts, kind, norm)
    return vector_eval_numpy(pts, kind, norm)


def warmup():
    """Compile the numba kernels on tiny inputs."""
    base = np.zeros((2, 2))
    idx = np.zeros((1, 3), dtype=np.int64)
    pts = np.zeros((1, 3, 1))
    for kind in (MAX_PAIRWISE, SUM_PAIRWISE, CYCLIC_MAX, CYCLIC_PERIMETER_AVG):
        finite_eval_numba(base, idx, kind)
        vector_eval_numba(pts, kind, ABSOLUTE)
