"""Sampling-based verification of the n-ary metric axiom systems.

Every check reduces to a batch of inequalities ``lhs <= rhs`` (or a strict
positivity test). For each axiom the lexicographically smallest violating
configuration is kept as the witness, so reports are deterministic.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .exceptions import PlanError
from .metric_core import ATOL, RTOL, GnMetric
from .sampling import SamplePlan, make_rng

STRICT = 1e-12
PERM_SAMPLES = 50
EXHAUSTIVE_PERM_MAX_ARITY = 5

PASS, FAIL, NOT_APPLICABLE = "pass", "fail", "not-applicable"


@dataclass
class Witness:
    """Offending configuration; ``margin`` > 0 measures the violation."""

    tuples: list
    lhs: float
    rhs: float
    margin: float

    def to_dict(self) -> dict:
        return {"tuples": self.tuples, "lhs": self.lhs, "rhs": self.rhs, "margin": self.margin}


@dataclass
class Verdict:
    axiom: str
    verdict: str
    checked: int = 0
    applicable: int = 0
    witness: Witness | None = None

    def to_dict(self) -> dict:
        return {
            "axiom": self.axiom,
            "verdict": self.verdict,
            "checked": self.checked,
            "applicable": self.applicable,
            "witness": None if self.witness is None else self.witness.to_dict(),
        }


@dataclass
class AxiomReport:
    suite: str
    verdicts: list[Verdict] = field(default_factory=list)
    tuples_checked: int = 0
    seed: int | None = None
    mode: str = "random"

    @property
    def passed(self) -> bool:
        return all(v.verdict != FAIL for v in self.verdicts)

    @property
    def failures(self) -> list[Verdict]:
        return [v for v in self.verdicts if v.verdict == FAIL]

    def __getitem__(self, axiom: str) -> Verdict:
        for v in self.verdicts:
            if v.axiom == axiom:
                return v
        raise KeyError(axiom)

    def to_dict(self) -> dict:
        return {
            "suite": self.suite,
            "mode": self.mode,
            "seed": self.seed,
            "tuples_checked": self.tuples_checked,
            "passed": self.passed,
            "verdicts": [v.to_dict() for v in self.verdicts],
        }


def _violates(lhs: np.ndarray, rhs: np.ndarray) -> np.ndarray:
    return lhs - rhs > ATOL + RTOL * np.abs(rhs)


class _Tracker:
    """Accumulates counts and the lexicographically smallest violation."""

    def __init__(self, g: GnMetric, axiom: str):
        self.g = g
        self.axiom = axiom
        self.checked = 0
        self.applicable = 0
        self.best_key = None
        self.witness = None

    def update(self, mask, keys, make_witness, applicable=None):
        """``keys`` is an ``(B, k)`` float array; ``make_witness(i)`` builds row ``i``'s witness."""
        size = len(mask)
        self.checked += size
        self.applicable += size if applicable is None else int(np.count_nonzero(applicable))
        rows = np.flatnonzero(mask)
        if rows.size == 0:
            return
        sub = keys[rows]
        first = rows[np.lexsort(sub.T[::-1])[0]]
        key = tuple(float(v) for v in keys[first])
        if self.best_key is None or key < self.best_key:
            self.best_key = key
            self.witness = make_witness(first)

    def verdict(self) -> Verdict:
        if self.witness is not None:
            state = FAIL
        elif self.applicable == 0:
            state = NOT_APPLICABLE
        else:
            state = PASS
        return Verdict(self.axiom, state, self.checked, self.applicable, self.witness)


def _keys(points: np.ndarray) -> np.ndarray:
    return points.reshape(points.shape[0], -1).astype(np.float64)


def _py_tuple(g: GnMetric, row) -> list:
    return [g.space.to_python(p) for p in row]


def _repeat(point_a, point_b, n, n_head):
    return [point_a] * n_head + [point_b] * (n - n_head)


def _pairwise_distinct(space, tup: np.ndarray, lo: int) -> np.ndarray:
    """True where entries ``lo:`` of every tuple are pairwise distinct."""
    n = tup.shape[1]
    ok = np.ones(tup.shape[0], dtype=bool)
    for a in range(lo, n):
        for b in range(a + 1, n):
            ok &= ~space.equal(tup[:, a], tup[:, b])
    return ok


def _some_distinct(space, tup: np.ndarray, lo: int) -> np.ndarray:
    n = tup.shape[1]
    ok = np.zeros(tup.shape[0], dtype=bool)
    for a in range(lo, n):
        for b in range(a + 1, n):
            ok |= ~space.equal(tup[:, a], tup[:, b])
    return ok


def _tuple_batches(g: GnMetric, plan: SamplePlan, pool, label: str, extra: int = 0):
    """Batches of n-tuples (plus ``extra`` trailing points) drawn per the plan."""
    width = g.arity + extra
    if plan.tuples is not None:
        fixed = g.space.coerce_tuples(plan.tuples, g.arity)
        if extra == 0:
            yield fixed
            return
        # every listed tuple is paired with every pool point
        reps_t = np.repeat(fixed, len(pool), axis=0)
        reps_w = np.tile(pool, (len(fixed),) + (1,) * (pool.ndim - 1))[:, None]
        yield np.concatenate([reps_t, reps_w], axis=1)
        return
    yield from plan.point_batches(g.space, pool, width, label)


def _permutations(n: int, cyclic: bool, rng) -> np.ndarray:
    if cyclic:
        return np.array([np.roll(np.arange(n), -r) for r in range(1, n)], dtype=np.int64)
    if n <= EXHAUSTIVE_PERM_MAX_ARITY:
        perms = list(itertools.permutations(range(n)))[1:]
        return np.array(perms, dtype=np.int64)
    return np.array([rng.permutation(n) for _ in range(PERM_SAMPLES)], dtype=np.int64)


def _check_family(g: GnMetric, plan: SamplePlan, family: str, g3_rule: str) -> AxiomReport:
    if g3_rule not in ("pairwise", "some-pair"):
        raise PlanError(f"unknown gating rule {g3_rule!r}")
    space, n = g.space, g.arity
    pool = plan.pool_for(space)
    if plan.tuples is not None and len(pool) == 0:
        fixed = space.coerce_tuples(plan.tuples, n)
        pool = np.unique(fixed.reshape((-1,) + space.point_shape), axis=0)
    tag = family
    report = AxiomReport(f"{family}-axioms", seed=plan.seed, mode=plan.mode)

    # [1] vanishing on constant tuples
    t1 = _Tracker(g, f"{tag}1")
    pts_src = [pool] if plan.mode == "exhaustive" or len(pool) <= plan.tuple_count else \
        (pool[i[:, 0]] for i in plan.index_batches(len(pool), 1, f"{tag}1"))
    for pts in pts_src:
        vals = g.repeated(pts, pts, n)
        t1.update(
            _violates(vals, np.zeros_like(vals)),
            _keys(pts),
            lambda i, pts=pts, vals=vals: Witness(
                [_py_tuple(g, [pts[i]] * n)], float(vals[i]), 0.0, float(vals[i])
            ),
        )

    # [2] strict positivity of G(a,...,a,b), a != b
    t2 = _Tracker(g, f"{tag}2")
    for pair in plan.point_batches(space, pool, 2, f"{tag}2"):
        a, b = pair[:, 0], pair[:, 1]
        distinct = ~space.equal(a, b)
        vals = g.repeated(a, b, n - 1)
        t2.update(
            distinct & (vals <= STRICT),
            _keys(pair),
            lambda i, a=a, b=b, vals=vals: Witness(
                [_py_tuple(g, _repeat(a[i], b[i], n, n - 1))], float(vals[i]), 0.0, STRICT - float(vals[i])
            ),
            applicable=distinct,
        )

    # [3] G(x1,...,x1,x2) <= G(x1,...,xn) for tuples with distinct tail
    t3 = _Tracker(g, f"{tag}3")
    gate = _pairwise_distinct if g3_rule == "pairwise" else _some_distinct
    for tup in _tuple_batches(g, plan, pool, f"{tag}3"):
        ok = gate(space, tup, 1)
        lhs = g.repeated(tup[:, 0], tup[:, 1], n - 1)
        rhs = g._eval(tup)
        t3.update(
            ok & _violates(lhs, rhs),
            _keys(tup),
            lambda i, tup=tup, lhs=lhs, rhs=rhs: Witness(
                [_py_tuple(g, _repeat(tup[i, 0], tup[i, 1], n, n - 1)), _py_tuple(g, tup[i])],
                float(lhs[i]), float(rhs[i]), float(lhs[i] - rhs[i]),
            ),
            applicable=ok,
        )

    # [4] invariance under permutations (G) or cyclic shifts (K)
    t4 = _Tracker(g, f"{tag}4")
    perms = _permutations(n, family == "K", make_rng(plan.seed, f"{tag}4/perms"))
    for tup in _tuple_batches(g, plan, pool, f"{tag}4"):
        base = g._eval(tup)
        permuted = tup[:, perms]  # (B, P, n, ...)
        flat = permuted.reshape((-1, n) + space.point_shape)
        vals = g._eval(flat).reshape(len(tup), len(perms))
        dev = np.abs(vals - base[:, None])
        tol = ATOL + RTOL * np.maximum(np.abs(vals), np.abs(base[:, None]))
        bad = np.any(dev > tol, axis=1)
        worst = np.argmax(dev, axis=1)

        def witness4(i, tup=tup, base=base, vals=vals, worst=worst, dev=dev):
            j = worst[i]
            return Witness(
                [_py_tuple(g, tup[i]), _py_tuple(g, tup[i][perms[j]])],
                float(base[i]), float(vals[i, j]), float(dev[i, j]),
            )

        t4.update(bad, _keys(tup), witness4)

    # [5] rectangle inequality with interpolating point w
    t5 = _Tracker(g, f"{tag}5")
    for ext in _tuple_batches(g, plan, pool, f"{tag}5", extra=1):
        tup, w = ext[:, :n], ext[:, n]
        lhs = g._eval(tup)
        split = tup.copy()
        split[:, 0] = w
        left = g.repeated(tup[:, 0], w, 1)
        right = g._eval(split)
        rhs = left + right
        t5.update(
            _violates(lhs, rhs),
            _keys(ext),
            lambda i, tup=tup, w=w, lhs=lhs, rhs=rhs, split=split: Witness(
                [_py_tuple(g, tup[i]), _py_tuple(g, _repeat(tup[i, 0], w[i], n, 1)), _py_tuple(g, split[i])],
                float(lhs[i]), float(rhs[i]), float(lhs[i] - rhs[i]),
            ),
        )

    for t in (t1, t2, t3, t4, t5):
        report.verdicts.append(t.verdict())
    report.tuples_checked = sum(v.checked for v in report.verdicts)
    return report


def check_g_axioms(g: GnMetric, plan: SamplePlan, g3_rule: str = "pairwise") -> AxiomReport:
    """Check G1-G5 (full permutation symmetry) on the sampled configurations."""
    return _check_family(g, plan, "G", g3_rule)


def check_k_axioms(k: GnMetric, plan: SamplePlan, g3_rule: str = "pairwise") -> AxiomReport:
    """Check K1-K5; symmetry is only required under cyclic shifts."""
    return _check_family(k, plan, "K", g3_rule)


def _pair_pool(g: GnMetric, plan: SamplePlan) -> np.ndarray:
    pool = plan.pool_for(g.space)
    if len(pool) == 0:
        raise PlanError("pair-level checks need a point pool")
    return pool


def check_metric_axioms(g: GnMetric, plan: SamplePlan) -> AxiomReport:
    """Check that the induced binary metric is symmetric, definite and triangular."""
    space = g.space
    pool = _pair_pool(g, plan)
    report = AxiomReport("metric-axioms", seed=plan.seed, mode=plan.mode)

    sym = _Tracker(g, "M-sym")
    ident = _Tracker(g, "M-id")
    for pair in plan.point_batches(space, pool, 2, "M-pairs"):
        x, y = pair[:, 0], pair[:, 1]
        dxy = g.derived_batch(x, y)
        dyx = g.derived_batch(y, x)
        dev = np.abs(dxy - dyx)
        sym.update(
            dev > ATOL + RTOL * np.maximum(dxy, dyx),
            _keys(pair),
            lambda i, x=x, y=y, dxy=dxy, dyx=dyx, dev=dev: Witness(
                [_py_tuple(g, [x[i], y[i]]), _py_tuple(g, [y[i], x[i]])],
                float(dxy[i]), float(dyx[i]), float(dev[i]),
            ),
        )
        same = space.equal(x, y)
        bad = np.where(same, dxy > ATOL, dxy <= STRICT)
        ident.update(
            bad,
            _keys(pair),
            lambda i, x=x, y=y, dxy=dxy, same=same: Witness(
                [_py_tuple(g, [x[i], y[i]])],
                float(dxy[i]), 0.0,
                float(dxy[i]) if same[i] else STRICT - float(dxy[i]),
            ),
        )

    tri = _Tracker(g, "M-tri")
    for trip in plan.point_batches(space, pool, 3, "M-tri"):
        x, y, z = trip[:, 0], trip[:, 1], trip[:, 2]
        lhs = g.derived_batch(x, z)
        rhs = g.derived_batch(x, y) + g.derived_batch(y, z)
        tri.update(
            _violates(lhs, rhs),
            _keys(trip),
            lambda i, x=x, y=y, z=z, lhs=lhs, rhs=rhs: Witness(
                [_py_tuple(g, [x[i], y[i], z[i]])], float(lhs[i]), float(rhs[i]), float(lhs[i] - rhs[i])
            ),
        )
    for t in (sym, ident, tri):
        report.verdicts.append(t.verdict())
    report.tuples_checked = sum(v.checked for v in report.verdicts)
    return report


def check_inequality_prop(g: GnMetric, plan: SamplePlan) -> AxiomReport:
    """Check ``G(x,y,...,y) <= (n-1) G(y,x,...,x)`` on sampled pairs."""
    n = g.arity
    pool = _pair_pool(g, plan)
    report = AxiomReport("swap-bound", seed=plan.seed, mode=plan.mode)
    t = _Tracker(g, "SwapBound")
    for pair in plan.point_batches(g.space, pool, 2, "SwapBound"):
        x, y = pair[:, 0], pair[:, 1]
        lhs = g.repeated(x, y, 1)
        rhs = (n - 1) * g.repeated(y, x, 1)
        t.update(
            _violates(lhs, rhs),
            _keys(pair),
            lambda i, x=x, y=y, lhs=lhs, rhs=rhs: Witness(
                [_py_tuple(g, _repeat(x[i], y[i], n, 1)), _py_tuple(g, _repeat(y[i], x[i], n, 1))],
                float(lhs[i]), float(rhs[i]), float(lhs[i] - rhs[i]),
            ),
        )
    report.verdicts.append(t.verdict())
    report.tuples_checked = t.checked
    return report


def check_ball_inclusion(g: GnMetric, plan: SamplePlan, radii: Iterable[float]) -> AxiomReport:
    """Check that the G-ball of radius r/n sits inside the d_G-ball of radius r."""
    radii = np.asarray(list(radii), dtype=np.float64)
    if radii.size == 0 or np.any(~(radii > 0)) or not np.all(np.isfinite(radii)):
        raise PlanError("radii must be a nonempty list of positive reals")
    n = g.arity
    pool = _pair_pool(g, plan)
    report = AxiomReport("ball-inclusion", seed=plan.seed, mode=plan.mode)
    t = _Tracker(g, "BallIncl")
    rng = make_rng(plan.seed, "BallIncl/radii")
    for pair in plan.point_batches(g.space, pool, 2, "BallIncl"):
        x, y = pair[:, 0], pair[:, 1]
        gval = g.repeated(x, y, 1)
        dval = g.derived_batch(x, y)
        if plan.mode == "exhaustive":
            r = np.repeat(radii[None, :], len(pair), axis=0)
        else:
            r = radii[rng.integers(0, len(radii), size=len(pair))][:, None]
        inside = gval[:, None] < r / n
        bad = inside & (dval[:, None] - r > ATOL + RTOL * r)
        # one key row per (pair, radius)
        keys = np.concatenate(
            [np.repeat(_keys(pair), r.shape[1], axis=0), r.reshape(-1, 1)], axis=1
        )
        flat_r = r.reshape(-1)
        rows = np.repeat(np.arange(len(pair)), r.shape[1])
        t.update(
            bad.reshape(-1),
            keys,
            lambda i, x=x, y=y, dval=dval, flat_r=flat_r, rows=rows, gval=gval: Witness(
                [_py_tuple(g, [x[rows[i]], y[rows[i]]]), [float(flat_r[i])]],
                float(dval[rows[i]]), float(flat_r[i]), float(dval[rows[i]] - flat_r[i]),
            ),
            applicable=inside.reshape(-1),
        )
    report.verdicts.append(t.verdict())
    report.tuples_checked = t.checked
    return report


def reevaluate(g: GnMetric, axiom: str, witness: Witness) -> tuple[float, float]:
    """Recompute ``(lhs, rhs)`` of a witness through the metric's evaluator."""
    kind = axiom.lstrip("GK") if axiom[:1] in "GK" and axiom[1:].isdigit() else axiom
    tups = witness.tuples
    n = g.arity
    if kind == "1":
        return g.evaluate(tups[0]), 0.0
    if kind == "2":
        return g.evaluate(tups[0]), 0.0
    if kind == "3":
        return g.evaluate(tups[0]), g.evaluate(tups[1])
    if kind == "4":
        return g.evaluate(tups[0]), g.evaluate(tups[1])
    if kind == "5":
        return g.evaluate(tups[0]), g.evaluate(tups[1]) + g.evaluate(tups[2])
    if kind == "SwapBound":
        return g.evaluate(tups[0]), (n - 1) * g.evaluate(tups[1])
    if kind == "M-sym":
        x, y = tups[0]
        return g.derived(x, y), g.derived(y, x)
    if kind == "M-id":
        x, y = tups[0]
        return g.derived(x, y), 0.0
    if kind == "M-tri":
        x, y, z = tups[0]
        return g.derived(x, z), g.derived(x, y) + g.derived(y, z)
    if kind == "BallIncl":
        (x, y), (r,) = tups
        return g.derived(x, y), float(r)
    raise KeyError(axiom)


def violation_reproduces(g: GnMetric, axiom: str, witness: Witness) -> bool:
    lhs, rhs = reevaluate(g, axiom, witness)
    return lhs == witness.lhs and rhs == witness.rhs and not math.isnan(lhs)
