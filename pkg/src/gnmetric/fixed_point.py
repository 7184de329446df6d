"""Certified Picard-type solvers for contractive self-maps of an n-metric space.

Two schemes are provided:

* :func:`solve_common_fixed_point` -- the interleaved scheme
  ``y_t = f(x_t) = g(x_{t+1})`` for a pair of commuting maps with
  ``G(f xi) <= q G(g xi)``;
* :func:`solve_quasi_contraction` -- plain Picard iteration for a map whose
  displacement is bounded by ``k`` times the largest of the self- and
  cross-displacement terms, ``0 <= k < 1/2``.

Both stop as soon as the a-priori bound ``q^t / (1 - q) * G(y_0, y_1, ..., y_1)``
drops below ``eps``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .exceptions import (
    CommutationError,
    EstimateUndefined,
    GnMetricError,
    PreimageResidualError,
    SolverError,
)
from .metric_core import ATOL, RTOL, FiniteSpace, GnMetric, Space
from .sampling import SamplePlan, make_rng

RESIDUAL_TOL = 1e-9
COMMUTE_SAMPLES = 100
STEP_RTOL = 1e-12

_REGISTRY: dict[str, Callable[[np.ndarray], np.ndarray]] = {}


def register_map(name: str):
    """Register a vectorised callable for use as ``SelfMap.named(name)``."""

    def deco(fn):
        _REGISTRY[name] = fn
        return fn

    return deco


register_map("identity")(lambda x: np.array(x, copy=True))
register_map("cos")(np.cos)
register_map("half_sin")(lambda x: 0.5 * np.sin(x))


class SelfMap:
    """Endo-map of a carrier, applied to point arrays of shape ``(k,) + point_shape``.

    ``preimage`` (optional) is a right inverse used by the interleaved scheme:
    ``self(preimage(y))`` must reproduce ``y`` within ``residual_tol``.
    """

    def __init__(self, fn, kind: str, params: dict | None = None, preimage: "SelfMap | None" = None,
                 residual_tol: float = RESIDUAL_TOL):
        self._fn = fn
        self.kind = kind
        self.params = params or {}
        self.preimage = preimage
        self.residual_tol = residual_tol

    @classmethod
    def affine(cls, a, b=0.0, preimage: "SelfMap | None" = None) -> "SelfMap":
        a_arr = np.asarray(a, dtype=np.float64)
        b_arr = np.asarray(b, dtype=np.float64)
        if a_arr.ndim == 2:
            fn = lambda x: x @ a_arr.T + b_arr  # noqa: E731
        else:
            fn = lambda x: a_arr * x + b_arr  # noqa: E731
        return cls(fn, "affine", {"a": a_arr.tolist(), "b": b_arr.tolist()}, preimage)

    @classmethod
    def identity(cls) -> "SelfMap":
        m = cls.named("identity")
        m.preimage = cls.named("identity")
        return m

    @classmethod
    def index(cls, values, preimage: "SelfMap | None" = None) -> "SelfMap":
        table = np.asarray(values, dtype=np.int64)
        return cls(lambda x: table[x], "finite-index-array", {"values": table.tolist()}, preimage)

    @classmethod
    def named(cls, name: str, preimage: "SelfMap | None" = None) -> "SelfMap":
        if name not in _REGISTRY:
            raise GnMetricError(f"unknown registered map {name!r}; known: {sorted(_REGISTRY)}")
        return cls(_REGISTRY[name], "registry-named", {"name": name}, preimage)

    def inverse(self) -> "SelfMap":
        """Exact inverse of an invertible affine map."""
        if self.kind != "affine":
            raise GnMetricError("only affine maps can be inverted automatically")
        a = np.asarray(self.params["a"], dtype=np.float64)
        b = np.asarray(self.params["b"], dtype=np.float64)
        if a.ndim == 2:
            ainv = np.linalg.inv(a)
            return SelfMap.affine(ainv, -(ainv @ b))
        if np.any(a == 0):
            raise GnMetricError("affine map with zero scale has no inverse")
        return SelfMap.affine(1.0 / a, -b / a)

    def apply(self, space: Space, points) -> np.ndarray:
        pts = space.coerce_points(points)
        return space.coerce_points(self._fn(pts))

    def __call__(self, x):
        return self._fn(x)

    def describe(self) -> dict:
        out = {"kind": self.kind, **self.params}
        if self.preimage is not None:
            out["preimage"] = self.preimage.describe()
        return out


def _map_tuples(space: Space, m: SelfMap, tup: np.ndarray) -> np.ndarray:
    flat = tup.reshape((-1,) + space.point_shape)
    return m.apply(space, flat).reshape(tup.shape)


@dataclass
class ContractionEstimate:
    mode: str
    sup_ratio: float
    samples: int
    skipped: int
    attained_at: list | None

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "sup_ratio": self.sup_ratio,
            "samples": self.samples,
            "skipped": self.skipped,
            "attained_at": self.attained_at,
        }


def _quasi_denominator(g: GnMetric, tup: np.ndarray, ftup: np.ndarray) -> np.ndarray:
    """Largest of G(x), G(x_i, f x_i, ...), G(x_i, f x_{i+1}, ...) (cyclically)."""
    n = g.arity
    den = g._eval(tup)
    for i in range(n):
        np.maximum(den, g.repeated(tup[:, i], ftup[:, i], 1), out=den)
    for i in range(n):
        np.maximum(den, g.repeated(tup[:, i], ftup[:, (i + 1) % n], 1), out=den)
    return den


def estimate_contraction_factor(
    g: GnMetric, f: SelfMap, gmap: SelfMap | None, mode: str, plan: SamplePlan
) -> ContractionEstimate:
    """Sup of the sampled contraction ratios; zero denominators are skipped."""
    if mode not in ("theorem1-ratio", "theorem2-quasi"):
        raise GnMetricError(f"unknown estimate mode {mode!r}")
    if mode == "theorem1-ratio" and gmap is None:
        raise GnMetricError("theorem1-ratio needs the companion map (identity allowed)")
    space = g.space
    pool = plan.pool_for(space)
    best, where, samples, skipped = -np.inf, None, 0, 0
    batches = [space.coerce_tuples(plan.tuples, g.arity)] if plan.tuples is not None else \
        plan.point_batches(space, pool, g.arity, f"estimate/{mode}")
    for tup in batches:
        ftup = _map_tuples(space, f, tup)
        num = g._eval(ftup)
        if mode == "theorem1-ratio":
            den = g._eval(_map_tuples(space, gmap, tup))
        else:
            den = _quasi_denominator(g, tup, ftup)
        live = den > 0
        skipped += int(np.count_nonzero(~live))
        samples += int(np.count_nonzero(live))
        if not live.any():
            continue
        ratio = np.where(live, num / np.where(live, den, 1.0), -np.inf)
        i = int(np.argmax(ratio))
        if ratio[i] > best:
            best = float(ratio[i])
            where = [space.to_python(p) for p in tup[i]]
    if samples == 0:
        raise EstimateUndefined("every sampled denominator was zero")
    return ContractionEstimate(mode, best, samples, skipped, where)


@dataclass
class IterationTrace:
    """Iterate history ``y_0..y_T`` with per-step certificates."""

    iterates: list
    step_values: list
    certificates: list
    q: float
    termination: str
    scheme: str
    inner: list = field(default_factory=list)
    hypothesis_violations: list = field(default_factory=list)

    @property
    def T(self) -> int:
        return len(self.iterates) - 1

    @property
    def u(self):
        return self.iterates[-1]

    @property
    def certified(self) -> bool:
        return self.termination in ("certified", "stalled")

    @property
    def bound(self) -> float:
        """Certified distance bound for ``u``; zero when iteration stalled on an exact fixed point."""
        return 0.0 if self.termination == "stalled" else self.certificates[-1]

    def to_dict(self) -> dict:
        return {
            "scheme": self.scheme,
            "termination": self.termination,
            "q": self.q,
            "T": self.T,
            "u": self.u,
            "bound": self.bound,
            "iterates": self.iterates,
            "step_values": self.step_values,
            "certificates": self.certificates,
            "inner_iterates": self.inner,
            "hypothesis_violations": self.hypothesis_violations,
        }


def _step(g: GnMetric, a: np.ndarray, b: np.ndarray) -> float:
    """G(a, b, ..., b)."""
    return float(g.repeated(a[None], b[None], 1)[0])


def _slack(g: GnMetric, y: np.ndarray) -> float:
    # float noise allowance for the step-contraction test on real spaces
    if isinstance(g.space, FiniteSpace):
        return 0.0
    return 1e-15 * (1.0 + float(np.max(np.abs(y)))) * g.arity**2


def _iterate(g, advance, y0, y1, q, eps, max_iter, scheme, inner=None):
    """Shared driver. ``advance(t)`` returns ``y_{t+2}`` given the state so far."""
    space = g.space
    ys = [y0, y1]
    steps = [_step(g, y0, y1)]
    certs = [steps[0] / (1.0 - q)]
    violations = []
    t = 0
    while True:
        if steps[t] == 0.0:
            termination = "stalled"
            break
        if certs[t] <= eps:
            termination = "certified"
            break
        if t >= 1 and steps[t] > q * steps[t - 1] * (1.0 + STEP_RTOL) + _slack(g, ys[t]):
            violations.append(t)
            termination = "hypothesis-violation"
            break
        if t >= max_iter:
            termination = "max-iter"
            break
        ys.append(advance(t))
        steps.append(_step(g, ys[t + 1], ys[t + 2]))
        certs.append(q * certs[t])
        t += 1
    T = t
    to_py = space.to_python
    return IterationTrace(
        iterates=[to_py(y) for y in ys[: T + 1]],
        step_values=steps[: T + 1],
        certificates=certs[: T + 1],
        q=q,
        termination=termination,
        scheme=scheme,
        inner=[] if inner is None else [to_py(x) for x in inner[: T + 1]],
        hypothesis_violations=violations,
    )


def _close(space: Space, a: np.ndarray, b: np.ndarray, tol: float) -> np.ndarray:
    d = space.distances(a, b)
    if isinstance(space, FiniteSpace):
        return d <= tol
    mag = np.abs(a).reshape(len(a), -1).max(axis=1)
    return d <= tol + RTOL * mag


def _commute_points(space: Space, x0: np.ndarray, samples: int, seed: int) -> np.ndarray:
    rng = make_rng(seed, "commute")
    if isinstance(space, FiniteSpace):
        pts = space.all_points()
        return pts if len(pts) <= samples else rng.choice(pts, size=samples, replace=False)
    scale = 1.0 + float(np.max(np.abs(x0)))
    shape = (samples,) + space.point_shape
    return space.coerce_points(x0 + rng.normal(scale=scale, size=shape))


def check_commutation(g: GnMetric, f: SelfMap, gmap: SelfMap, points) -> None:
    space = g.space
    pts = space.coerce_points(points)
    fg = f.apply(space, gmap.apply(space, pts))
    gf = gmap.apply(space, f.apply(space, pts))
    ok = _close(space, fg, gf, ATOL)
    if not ok.all():
        i = int(np.flatnonzero(~ok)[0])
        raise CommutationError(
            f"f(g(x)) = {space.to_python(fg[i])} but g(f(x)) = {space.to_python(gf[i])} "
            f"at x = {space.to_python(pts[i])}"
        )


def _pull_back(g: GnMetric, gmap: SelfMap, y: np.ndarray, label: str) -> np.ndarray:
    space = g.space
    x = gmap.preimage.apply(space, y[None])
    back = gmap.apply(space, x)
    if not _close(space, back, y[None], gmap.residual_tol)[0]:
        raise PreimageResidualError(
            f"preimage residual at {label}: g(preimage(y)) = {space.to_python(back[0])} "
            f"differs from y = {space.to_python(y)} by more than {gmap.residual_tol}"
        )
    return x[0]


def solve_common_fixed_point(
    g: GnMetric,
    f: SelfMap,
    gmap: SelfMap,
    x0,
    q: float,
    eps: float,
    max_iter: int = 10_000,
    *,
    commute_points=None,
    commute_samples: int = COMMUTE_SAMPLES,
    seed: int = 0,
) -> IterationTrace:
    """Common fixed point of commuting ``f`` and ``gmap`` via ``y_t = f(x_t) = gmap(x_{t+1})``.

    ``gmap.preimage`` supplies ``x_{t+1}`` from ``y_t``. Raises
    :class:`CommutationError` or :class:`PreimageResidualError` when the
    hypotheses fail; a trace with ``termination == "max-iter"`` is returned
    when the budget runs out.
    """
    if not 0.0 < q < 1.0:
        raise SolverError("q must lie in (0, 1)")
    if not eps > 0:
        raise SolverError("eps must be positive")
    if gmap.preimage is None:
        raise SolverError("the companion map needs a preimage oracle")
    space = g.space
    x0 = space.coerce_point(x0)
    _pull_back(g, gmap, x0, "x0")
    if commute_points is None:
        commute_points = _commute_points(space, x0, commute_samples, seed)
    check_commutation(g, f, gmap, commute_points)

    xs = [x0]
    ys = []

    def fx(x):
        return f.apply(space, x[None])[0]

    ys.append(fx(xs[0]))
    xs.append(_pull_back(g, gmap, ys[0], "iterate 0"))
    ys.append(fx(xs[1]))

    def advance(t):
        # produce y_{t+2}
        xs.append(_pull_back(g, gmap, ys[t + 1], f"iterate {t + 1}"))
        ys.append(fx(xs[-1]))
        return ys[-1]

    return _iterate(g, advance, ys[0], ys[1], q, eps, max_iter, "common", inner=xs)


def solve_quasi_contraction(
    g: GnMetric, f: SelfMap, y0, k: float, eps: float, max_iter: int = 10_000
) -> IterationTrace:
    """Fixed point of a quasi-contraction by Picard iteration ``y_{t+1} = f(y_t)``.

    The contraction factor used in the certificate is ``q = k / (1 - k)``.
    """
    if not 0.0 <= k < 0.5:
        raise SolverError("k must lie in [0, 1/2)")
    if not eps > 0:
        raise SolverError("eps must be positive")
    space = g.space
    q = k / (1.0 - k)
    ys = [space.coerce_point(y0)]

    def fx(x):
        return f.apply(space, x[None])[0]

    ys.append(fx(ys[0]))

    def advance(t):
        ys.append(fx(ys[-1]))
        return ys[-1]

    return _iterate(g, advance, ys[0], ys[1], q, eps, max_iter, "quasi")


def verify_fixed_point(g: GnMetric, f: SelfMap, gmap: SelfMap | None, u, tol: float) -> bool:
    """True iff d_G(f(u), u) <= tol and, when given, d_G(gmap(u), u) <= tol."""
    space = g.space
    up = space.coerce_points([u])
    if g.derived_batch(f.apply(space, up), up)[0] > tol:
        return False
    if gmap is not None and g.derived_batch(gmap.apply(space, up), up)[0] > tol:
        return False
    return True


@dataclass
class SolverConfig:
    """Solver choice plus parameters, reusable across start points."""

    theorem: int
    f: SelfMap
    eps: float
    gmap: SelfMap | None = None
    q: float | None = None
    k: float | None = None
    max_iter: int = 10_000
    seed: int = 0

    def run(self, g: GnMetric, start) -> IterationTrace:
        if self.theorem == 1:
            if self.gmap is None or self.q is None:
                raise SolverError("theorem 1 needs gmap and q")
            return solve_common_fixed_point(g, self.f, self.gmap, start, self.q, self.eps, self.max_iter, seed=self.seed)
        if self.theorem == 2:
            if self.k is None:
                raise SolverError("theorem 2 needs k")
            return solve_quasi_contraction(g, self.f, start, self.k, self.eps, self.max_iter)
        raise SolverError(f"unknown theorem {self.theorem!r}")


@dataclass
class UniquenessResult:
    unique: bool
    max_pairwise: float
    points: list
    traces: list

    def __bool__(self):
        return self.unique

    def to_dict(self) -> dict:
        return {
            "unique": self.unique,
            "max_pairwise_dG": self.max_pairwise,
            "points": self.points,
            "terminations": [t.termination for t in self.traces],
        }


def uniqueness_probe(g: GnMetric, config: SolverConfig, seeds, tol: float) -> UniquenessResult:
    """Run the solver from every start point and compare the limits under d_G."""
    seeds = list(seeds)
    if len(seeds) < 2:
        raise GnMetricError("uniqueness probe needs at least two start points")
    traces = []
    for s in seeds:
        try:
            traces.append(config.run(g, s))
        except SolverError as exc:
            raise type(exc)(f"start point {s!r}: {exc}") from exc
    pts = g.space.coerce_points([t.u for t in traces])
    worst = 0.0
    for i in range(len(pts)):
        d = g.derived_batch(np.repeat(pts[i : i + 1], len(pts), axis=0), pts)
        worst = max(worst, float(d.max()))
    ok = worst <= tol and all(t.certified for t in traces)
    return UniquenessResult(ok, worst, [t.u for t in traces], traces)


@dataclass
class ContinuityAtFixedPoint:
    status: str
    factor: float | None
    worst_margin: float | None

    def to_dict(self) -> dict:
        return {"status": self.status, "factor": self.factor, "worst_margin": self.worst_margin}


def continuity_at_fixed_point(g: GnMetric, f: SelfMap, u, k: float, sequence) -> ContinuityAtFixedPoint:
    """Check ``G(f y_m, u, ..., u) <= k / (1 - (n-1) k) * G(y_m, u, ..., u)`` along a sequence.

    Only meaningful while ``(n-1) k < 1``; otherwise reports ``not-applicable``.
    """
    n = g.arity
    if (n - 1) * k >= 1.0:
        return ContinuityAtFixedPoint("not-applicable", None, None)
    factor = k / (1.0 - (n - 1) * k)
    space = g.space
    ys = space.coerce_points(sequence)
    us = np.repeat(space.coerce_points([u]), len(ys), axis=0)
    lhs = g.repeated(f.apply(space, ys), us, 1)
    rhs = factor * g.repeated(ys, us, 1)
    margin = lhs - rhs
    ok = bool(np.all(lhs <= rhs + ATOL + RTOL * rhs))
    return ContinuityAtFixedPoint("pass" if ok else "fail", factor, float(margin.max()))
