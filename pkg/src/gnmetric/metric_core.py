"""Carrier spaces, base metrics and n-ary metric constructions.

Points of a :class:`FiniteSpace` are integer indices ``0..m-1``; points of a
:class:`RealSpace` are floats (``dim == 1``) or length-``dim`` vectors.
Internally a batch of n-tuples is an array of shape ``(N, n) + point_shape``.
"""
from __future__ import annotations

import enum
from typing import Callable, Sequence

import numpy as np

from . import _kernels
from .exceptions import ArityError, PointError, SpaceValidationError

ATOL = 1e-9
RTOL = 1e-12


class Kind(str, enum.Enum):
    MAX_PAIRWISE = "max_pairwise"
    SUM_PAIRWISE = "sum_pairwise"
    CYCLIC_MAX = "cyclic_max"
    CYCLIC_PERIMETER_AVG = "cyclic_perimeter_avg"
    EXPLICIT_TABLE = "explicit_table"


_KERNEL_CODE = {
    Kind.MAX_PAIRWISE: _kernels.MAX_PAIRWISE,
    Kind.SUM_PAIRWISE: _kernels.SUM_PAIRWISE,
    Kind.CYCLIC_MAX: _kernels.CYCLIC_MAX,
    Kind.CYCLIC_PERIMETER_AVG: _kernels.CYCLIC_PERIMETER_AVG,
}

_NORM_CODE = {
    "euclidean": _kernels.EUCLIDEAN,
    "chebyshev": _kernels.CHEBYSHEV,
    "absolute": _kernels.ABSOLUTE,
}


class Space:
    """Base class for carriers. Subclasses define ``point_shape``."""

    point_shape: tuple[int, ...] = ()

    def coerce_points(self, points) -> np.ndarray:
        """Validate a flat collection of points; returns shape ``(k,) + point_shape``."""
        raise NotImplementedError

    def coerce_point(self, point) -> np.ndarray:
        return self.coerce_points([point])[0]

    def coerce_tuples(self, tuples, arity: int | None = None) -> np.ndarray:
        """Validate a batch of tuples; returns shape ``(N, n) + point_shape``."""
        raise NotImplementedError

    def distance(self, a, b) -> float:
        """Base distance between two points."""
        raise NotImplementedError

    def distances(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Elementwise base distance between two point arrays of equal length."""
        raise NotImplementedError

    def to_python(self, point):
        raise NotImplementedError

    def equal(self, a: np.ndarray, b: np.ndarray) -> np.ndarray:
        """Elementwise point identity for arrays of shape ``(k,) + point_shape``."""
        if self.point_shape:
            return np.all(a == b, axis=-1)
        return a == b

    def describe(self) -> dict:
        raise NotImplementedError


class FiniteSpace(Space):
    """Finite indexed point set with a validated base-distance matrix."""

    point_shape = ()

    def __init__(self, base, *, tol: float = ATOL):
        base = np.array(base, dtype=np.float64)
        validate_base_matrix(base, tol=tol)
        base.setflags(write=False)
        self.base = base
        self.size = base.shape[0]

    @classmethod
    def from_points(cls, points, norm: str = "euclidean") -> "FiniteSpace":
        """Tabulate the base distance of a real point cloud."""
        pts = np.asarray(points, dtype=np.float64)
        if pts.ndim == 1:
            pts = pts[:, None]
        space = RealSpace(pts.shape[1], norm)
        m = pts.shape[0]
        ii, jj = np.meshgrid(np.arange(m), np.arange(m), indexing="ij")
        base = space.distances(pts[ii.ravel()], pts[jj.ravel()]).reshape(m, m)
        return cls(base)

    def coerce_points(self, points) -> np.ndarray:
        arr = np.asarray(points)
        if arr.size and not np.issubdtype(arr.dtype, np.integer):
            if not np.all(np.mod(arr, 1) == 0):
                raise PointError(f"finite-space points must be integer indices, got {arr!r}")
        arr = arr.astype(np.int64).reshape(-1)
        if arr.size and (arr.min() < 0 or arr.max() >= self.size):
            bad = arr[(arr < 0) | (arr >= self.size)][0]
            raise PointError(f"point {int(bad)} outside finite space of size {self.size}")
        return arr

    def coerce_tuples(self, tuples, arity=None) -> np.ndarray:
        arr = np.asarray(tuples)
        if arr.ndim == 1:
            arr = arr[None, :]
        if arr.ndim != 2:
            raise PointError(f"expected a (N, n) batch of index tuples, got shape {arr.shape}")
        if arity is not None and arr.shape[1] != arity:
            raise ArityError(f"tuple length {arr.shape[1]} does not match arity {arity}")
        return self.coerce_points(arr).reshape(arr.shape)

    def distance(self, a, b) -> float:
        return float(self.base[int(a), int(b)])

    def distances(self, a, b):
        return self.base[np.asarray(a, dtype=np.int64), np.asarray(b, dtype=np.int64)]

    def all_points(self) -> np.ndarray:
        return np.arange(self.size, dtype=np.int64)

    def to_python(self, point):
        return int(point)

    def describe(self) -> dict:
        return {"kind": "finite", "size": self.size}


class RealSpace(Space):
    """Fixed-dimension real vectors under a registered base norm."""

    def __init__(self, dim: int = 1, norm: str = "absolute"):
        if dim < 1:
            raise SpaceValidationError("dim must be at least 1")
        if norm not in _NORM_CODE:
            raise SpaceValidationError(f"unknown base norm {norm!r}; choose from {sorted(_NORM_CODE)}")
        if norm == "absolute" and dim != 1:
            raise SpaceValidationError("the absolute-difference norm requires dim == 1")
        self.dim = dim
        self.norm = norm
        self.point_shape = (dim,) if dim > 1 else ()
        self._norm_code = _NORM_CODE[norm]

    def _check_finite(self, arr):
        if not np.all(np.isfinite(arr)):
            raise PointError("real-space points must be finite")

    def coerce_points(self, points) -> np.ndarray:
        arr = np.asarray(points, dtype=np.float64)
        if self.dim == 1:
            arr = arr.reshape(-1)
        else:
            if arr.ndim == 1 and arr.shape[0] == self.dim:
                arr = arr[None, :]
            if arr.ndim != 2 or arr.shape[1] != self.dim:
                raise PointError(f"expected points of dimension {self.dim}, got shape {arr.shape}")
        self._check_finite(arr)
        return arr

    def coerce_tuples(self, tuples, arity=None) -> np.ndarray:
        arr = np.asarray(tuples, dtype=np.float64)
        want = 2 + len(self.point_shape)
        if arr.ndim == want - 1:
            arr = arr[None, ...]
        if arr.ndim != want or arr.shape[2:] != self.point_shape:
            raise PointError(f"expected a batch of shape (N, n{', %d' % self.dim if self.dim > 1 else ''}), got {arr.shape}")
        if arity is not None and arr.shape[1] != arity:
            raise ArityError(f"tuple length {arr.shape[1]} does not match arity {arity}")
        self._check_finite(arr)
        return arr

    def as_vectors(self, tuples: np.ndarray) -> np.ndarray:
        """``(N, n) + point_shape`` -> ``(N, n, dim)`` for the kernels."""
        if self.dim == 1:
            return tuples[..., None]
        return tuples

    def distances(self, a, b):
        a = np.asarray(a, dtype=np.float64)
        b = np.asarray(b, dtype=np.float64)
        if self.dim == 1:
            a, b = a.reshape(-1, 1), b.reshape(-1, 1)
        return _kernels._vector_dist_numpy(a, b, self._norm_code)

    def distance(self, a, b) -> float:
        return float(self.distances(self.coerce_points([a]), self.coerce_points([b]))[0])

    def to_python(self, point):
        if self.dim == 1:
            return float(point)
        return [float(v) for v in point]

    def describe(self) -> dict:
        return {"kind": "real", "dim": self.dim, "norm": self.norm}


def validate_base_matrix(base: np.ndarray, tol: float = ATOL) -> None:
    """Raise :class:`SpaceValidationError` naming the first offending cell."""
    if base.ndim != 2 or base.shape[0] != base.shape[1]:
        raise SpaceValidationError(f"base matrix must be square, got shape {base.shape}")
    if base.shape[0] == 0:
        raise SpaceValidationError("base matrix must be non-empty")
    if not np.all(np.isfinite(base)):
        i, j = np.argwhere(~np.isfinite(base))[0]
        raise SpaceValidationError(f"base[{i}][{j}] is not finite", cell=(int(i), int(j)))
    neg = np.argwhere(base < 0)
    if neg.size:
        i, j = neg[0]
        raise SpaceValidationError(f"base[{i}][{j}] = {base[i, j]} is negative", cell=(int(i), int(j)))
    diag = np.flatnonzero(np.abs(np.diag(base)) > tol)
    if diag.size:
        i = int(diag[0])
        raise SpaceValidationError(f"base[{i}][{i}] = {base[i, i]} must be zero", cell=(i, i))
    asym = np.argwhere(np.abs(base - base.T) > tol + RTOL * np.abs(base))
    if asym.size:
        i, j = asym[0]
        raise SpaceValidationError(
            f"base[{i}][{j}] = {base[i, j]} differs from base[{j}][{i}] = {base[j, i]}",
            cell=(int(i), int(j)),
        )
    # via[i, j] = min_k base[i, k] + base[k, j]
    via = np.min(base[:, :, None] + base[None, :, :], axis=1)
    bad = np.argwhere(base > via + tol + RTOL * via)
    if bad.size:
        i, j = bad[0]
        k = int(np.argmin(base[i, :] + base[:, j]))
        raise SpaceValidationError(
            f"triangle inequality fails at base[{i}][{j}] = {base[i, j]} > "
            f"base[{i}][{k}] + base[{k}][{j}] = {via[i, j]}",
            cell=(int(i), int(j)),
        )


class GnMetric:
    """An n-ary distance evaluator over a carrier space.

    >>> g = GnMetric(RealSpace(), 3, "max_pairwise")
    >>> g(0, 1, 3)
    3.0
    """

    def __init__(self, space: Space, arity: int, kind: Kind | str, table=None):
        if int(arity) != arity or arity < 3:
            raise ArityError(f"arity must be an integer >= 3, got {arity}")
        self.space = space
        self.arity = int(arity)
        self.kind = Kind(kind)
        self.table = None
        if self.kind is Kind.EXPLICIT_TABLE:
            if not isinstance(space, FiniteSpace):
                raise SpaceValidationError("explicit tables require a finite space")
            if table is None:
                raise SpaceValidationError("explicit_table metric needs a table")
            values = np.array(table, dtype=np.float64)
            expected = (space.size,) * self.arity
            if values.shape != expected:
                raise SpaceValidationError(f"table shape {values.shape} does not match {expected}")
            if np.isnan(values).any():
                raise SpaceValidationError("table contains NaN entries")
            if not np.all(np.isfinite(values)) or (values < 0).any():
                raise SpaceValidationError("table entries must be finite and nonnegative")
            values.setflags(write=False)
            self.table = values
        elif table is not None:
            raise SpaceValidationError(f"{self.kind.value} does not take a table")

    @classmethod
    def from_function(cls, space: "FiniteSpace", arity: int, fn: Callable[..., float]) -> "GnMetric":
        """Tabulate ``fn(*indices)`` over every index tuple of a finite space."""
        shape = (space.size,) * arity
        values = np.empty(shape)
        for tup in np.ndindex(*shape):
            values[tup] = fn(*tup)
        return cls(space, arity, Kind.EXPLICIT_TABLE, table=values)

    def batch(self, tuples) -> np.ndarray:
        """Evaluate on a batch of tuples, shape ``(N, n) + point_shape``."""
        arr = self.space.coerce_tuples(tuples, self.arity)
        return self._eval(arr)

    def _eval(self, arr: np.ndarray) -> np.ndarray:
        # arr already validated
        if arr.shape[0] == 0:
            return np.zeros(0)
        if self.kind is Kind.EXPLICIT_TABLE:
            return self.table[tuple(arr.T)]
        code = _KERNEL_CODE[self.kind]
        if isinstance(self.space, FiniteSpace):
            return _kernels.finite_eval(self.space.base, arr, code)
        return _kernels.vector_eval(self.space.as_vectors(arr), code, self.space._norm_code)

    def evaluate(self, points: Sequence) -> float:
        pts = self.space.coerce_points(points)
        if len(pts) != self.arity:
            raise ArityError(f"tuple length {len(pts)} does not match arity {self.arity}")
        return float(self._eval(pts[None, ...])[0])

    def __call__(self, *points) -> float:
        return self.evaluate(points)

    # helpers over point arrays ------------------------------------------------

    def repeated(self, head: np.ndarray, tail: np.ndarray, n_head: int = 1) -> np.ndarray:
        """Evaluate G(head x n_head, tail x (n - n_head)) elementwise over point arrays."""
        k = head.shape[0]
        tup = np.empty((k, self.arity) + self.space.point_shape, dtype=head.dtype)
        tup[:, :n_head] = head[:, None]
        tup[:, n_head:] = tail[:, None]
        return self._eval(tup)

    def derived_batch(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """d_G over coerced point arrays: G(x,y,...,y) + G(x,...,x,y)."""
        return self.repeated(x, y, 1) + self.repeated(x, y, self.arity - 1)

    def derived(self, x, y) -> float:
        xs = self.space.coerce_points([x])
        ys = self.space.coerce_points([y])
        return float(self.derived_batch(xs, ys)[0])

    def describe(self) -> dict:
        return {"kind": self.kind.value, "arity": self.arity, "space": self.space.describe()}

    def __repr__(self):
        return f"GnMetric(kind={self.kind.value!r}, arity={self.arity}, space={self.space.describe()})"


def _construct(kind: Kind, space: Space, n: int, t) -> float:
    return GnMetric(space, n, kind).evaluate(t)


def gn_max_pairwise(space: Space, n: int, t) -> float:
    """Largest base distance over all pairs of tuple entries."""
    return _construct(Kind.MAX_PAIRWISE, space, n, t)


def gn_sum_pairwise(space: Space, n: int, t) -> float:
    """Sum of base distances over all ordered pairs ``r != s``."""
    return _construct(Kind.SUM_PAIRWISE, space, n, t)


def k_cyclic_max(space: Space, n: int, t) -> float:
    """Largest base distance between cyclically consecutive entries."""
    return _construct(Kind.CYCLIC_MAX, space, n, t)


def k_cyclic_perimeter_avg(space: Space, n: int, t) -> float:
    """Closed-polygon perimeter through the entries, divided by ``n``."""
    return _construct(Kind.CYCLIC_PERIMETER_AVG, space, n, t)


def derived_metric(g: GnMetric, x, y) -> float:
    """Binary metric induced by ``g``: ``G(x,y,...,y) + G(x,...,x,y)``."""
    return g.derived(x, y)
