"""Finite-prefix diagnostics for convergence, Cauchy behaviour and continuity.

Nothing here claims an asymptotic fact: every verdict is relative to the
supplied prefix, tail start and tolerance.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import GnMetricError, PointError
from .metric_core import ATOL, RTOL, GnMetric
from .sampling import make_rng

DEFAULT_EXHAUSTIVE_CAP = 10**5
DEFAULT_SUBSAMPLE = 10**4
_CHUNK = 1 << 15


class SequencePrefix:
    """Validated finite prefix ``x_0 .. x_{L-1}`` of a sequence in a space."""

    def __init__(self, space, points):
        pts = space.coerce_points(points)
        if len(pts) < 2:
            raise PointError("a sequence prefix needs at least two points")
        self.space = space
        self.points = pts

    def __len__(self):
        return len(self.points)


def _prefix(g: GnMetric, s) -> SequencePrefix:
    if isinstance(s, SequencePrefix):
        if s.space is not g.space:
            raise PointError("sequence belongs to a different space")
        return s
    return SequencePrefix(g.space, s)


def _tail(s: SequencePrefix, start: int) -> np.ndarray:
    if start < 0 or start >= len(s):
        raise GnMetricError(f"tail start {start} leaves an empty tail (prefix length {len(s)})")
    return s.points[start:]


def _leq(lhs, rhs):
    return lhs <= rhs + ATOL + RTOL * np.abs(rhs)


@dataclass
class ConvergenceReport:
    criterion3_sup_tail: float
    criterion4_sup_tail: float
    tail_start: int
    verdict: str
    cross_bound_ok: bool
    dg_bound_ok: bool
    tol: float

    @property
    def converged(self) -> bool:
        return self.verdict == "converged-within-tol"

    def to_dict(self) -> dict:
        return {
            "criterion3_sup_tail": self.criterion3_sup_tail,
            "criterion4_sup_tail": self.criterion4_sup_tail,
            "tail_start": self.tail_start,
            "tol": self.tol,
            "verdict": self.verdict,
            "cross_bound_ok": self.cross_bound_ok,
            "dg_bound_ok": self.dg_bound_ok,
        }


def convergence_report(g: GnMetric, s, limit, tail_start: int, tol: float) -> ConvergenceReport:
    """Compare the tail against a candidate limit.

    ``criterion3`` is G(x_m, ..., x_m, x) and ``criterion4`` is G(x_m, x, ..., x).
    Both must stay below ``tol`` over the whole tail.
    """
    if not tol > 0:
        raise GnMetricError("tol must be positive")
    s = _prefix(g, s)
    tail = _tail(s, tail_start)
    n = g.arity
    lim = np.repeat(g.space.coerce_points([limit]), len(tail), axis=0)
    c3 = g.repeated(tail, lim, n - 1)
    c4 = g.repeated(tail, lim, 1)
    dg = c3 + c4
    sup3, sup4 = float(c3.max()), float(c4.max())
    return ConvergenceReport(
        criterion3_sup_tail=sup3,
        criterion4_sup_tail=sup4,
        tail_start=tail_start,
        verdict="converged-within-tol" if sup3 < tol and sup4 < tol else "not-converged-at-prefix",
        cross_bound_ok=bool(np.all(_leq(c4, (n - 1) * c3))),
        dg_bound_ok=bool(np.all(_leq(dg, n * c3))),
        tol=float(tol),
    )


@dataclass
class CauchyReport:
    two_index_sup: float
    full_sup: float
    amplification_ok: bool
    full_mode: str
    combinations: int
    N: int

    def to_dict(self) -> dict:
        return {
            "N": self.N,
            "two_index_sup": self.two_index_sup,
            "full_sup": self.full_sup,
            "amplification_ok": self.amplification_ok,
            "full_mode": self.full_mode,
            "combinations": self.combinations,
        }


def cauchy_report(
    g: GnMetric,
    s,
    N: int,
    exhaustive_cap: int = DEFAULT_EXHAUSTIVE_CAP,
    *,
    subsample: int = DEFAULT_SUBSAMPLE,
    seed: int = 0,
) -> CauchyReport:
    """Two-index and full m-index suprema of G over the tail ``x_N, x_{N+1}, ...``.

    The full supremum must not exceed ``(m-1)`` times the two-index one.
    """
    s = _prefix(g, s)
    tail = _tail(s, N)
    m = g.arity
    L = len(tail)

    ii, jj = np.meshgrid(np.arange(L), np.arange(L), indexing="ij")
    two = g.repeated(tail[ii.ravel()], tail[jj.ravel()], 1)
    two_sup = float(two.max())

    total = L**m
    if total <= exhaustive_cap:
        mode = "exhaustive"
        full_sup = 0.0
        shape = (L,) * m
        for start in range(0, total, _CHUNK):
            flat = np.arange(start, min(start + _CHUNK, total))
            idx = np.stack(np.unravel_index(flat, shape), axis=1)
            full_sup = max(full_sup, float(g._eval(tail[idx]).max()))
        combos = total
    else:
        mode = "subsampled"
        idx = make_rng(seed, "cauchy").integers(0, L, size=(subsample, m))
        full_sup = float(g._eval(tail[idx]).max())
        combos = subsample
    ok = bool(_leq(full_sup, (m - 1) * two_sup))
    return CauchyReport(two_sup, full_sup, ok, mode, combos, N)


@dataclass
class ContinuityResult:
    holds: bool
    worst_margin: float
    worst_index: int

    def __bool__(self):
        return self.holds

    def to_dict(self) -> dict:
        return {"holds": self.holds, "worst_margin": self.worst_margin, "worst_index": self.worst_index}


def continuity_probe(g: GnMetric, seqs, limits, tail_start: int = 0) -> ContinuityResult:
    """Check the perturbation bound behind joint continuity of G.

    For each tail index m::

        |G(x_m1, ..., x_mn) - G(l_1, ..., l_n)| <= (n-1) * sum_i G(l_i, x_mi, ..., x_mi)

    ``worst_margin`` is the largest ``lhs - rhs`` seen (negative when the bound holds strictly).
    """
    n = g.arity
    if len(seqs) != n:
        raise GnMetricError(f"need {n} sequences, got {len(seqs)}")
    prefixes = [_prefix(g, s) for s in seqs]
    lengths = {len(p) for p in prefixes}
    if len(lengths) != 1:
        raise GnMetricError("all sequence prefixes must have the same length")
    lim = g.space.coerce_points(limits)
    if len(lim) != n:
        raise GnMetricError(f"limits must have {n} points")
    cols = [_tail(p, tail_start) for p in prefixes]
    T = len(cols[0])
    stacked = np.stack(cols, axis=1)  # (T, n, ...)
    moving = g._eval(stacked)
    fixed = g.evaluate(lim)
    lhs = np.abs(moving - fixed)
    rhs = np.zeros(T)
    for i in range(n):
        rhs += g.repeated(np.repeat(lim[i : i + 1], T, axis=0), cols[i], 1)
    rhs *= n - 1
    margin = lhs - rhs
    worst = int(np.argmax(margin))
    holds = bool(np.all(_leq(lhs, rhs)))
    return ContinuityResult(holds, float(margin[worst]), tail_start + worst)
