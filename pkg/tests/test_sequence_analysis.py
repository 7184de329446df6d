import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gnmetric import (
    FiniteSpace,
    GnMetric,
    GnMetricError,
    PointError,
    RealSpace,
    SequencePrefix,
    cauchy_report,
    continuity_probe,
    convergence_report,
)

R = RealSpace()


def geometric(L, rate=0.5, offset=0.0):
    return offset + rate ** np.arange(L)


def test_convergence_geometric(gmax3):
    rep = convergence_report(gmax3, geometric(31), 0.0, 20, 1e-5)
    assert rep.converged
    assert rep.criterion3_sup_tail == 2.0**-20
    assert rep.criterion4_sup_tail == 2.0**-20
    assert rep.cross_bound_ok and rep.dg_bound_ok


def test_convergence_constant(gmax3):
    rep = convergence_report(gmax3, [3.5] * 5, 3.5, 0, 1e-12)
    assert rep.criterion3_sup_tail == rep.criterion4_sup_tail == 0.0
    assert rep.converged


def test_divergent_prefix(gmax3):
    rep = convergence_report(gmax3, np.arange(10.0), 0.0, 0, 0.9)
    assert rep.verdict == "not-converged-at-prefix"


def test_convergence_errors(gmax3, line4):
    with pytest.raises(GnMetricError):
        convergence_report(gmax3, geometric(5), 0.0, 5, 1e-3)
    with pytest.raises(PointError):
        convergence_report(gmax3, SequencePrefix(line4, [0, 1]), 0.0, 0, 1e-3)
    with pytest.raises(PointError):
        SequencePrefix(R, [1.0])


@pytest.mark.parametrize("kind", ["max_pairwise", "sum_pairwise"])
@settings(max_examples=30, deadline=None)
@given(rate=st.floats(-0.95, 0.95), lim=st.floats(-50, 50), n=st.integers(3, 5))
def test_equivalence_inequalities(kind, rate, lim, n):
    g = GnMetric(R, n, kind)
    rep = convergence_report(g, geometric(25, rate, lim), lim, 0, 1.0)
    assert rep.cross_bound_ok and rep.dg_bound_ok


@pytest.mark.parametrize("kind", ["max_pairwise", "sum_pairwise"])
@settings(max_examples=30, deadline=None)
@given(rate=st.floats(0.1, 0.9), n=st.integers(3, 4), start=st.integers(0, 15))
def test_convergent_implies_cauchy(kind, rate, n, start):
    g = GnMetric(R, n, kind)
    s = geometric(20, rate)
    c = convergence_report(g, s, 0.0, start, 1.0)
    t = max(c.criterion3_sup_tail, c.criterion4_sup_tail) * (1 + 1e-9) + 1e-300
    assert convergence_report(g, s, 0.0, start, t).converged
    assert cauchy_report(g, s, start).two_index_sup <= 2 * n * t


def test_cauchy_geometric(gmax3):
    rep = cauchy_report(gmax3, geometric(41), 10)
    assert rep.two_index_sup <= 2.0**-10
    assert rep.full_mode == "exhaustive"
    assert rep.combinations == 31**3
    assert rep.amplification_ok


def test_cauchy_constant(gmax3):
    rep = cauchy_report(gmax3, [2.0] * 6, 0)
    assert rep.two_index_sup == rep.full_sup == 0.0
    assert rep.amplification_ok


def test_cauchy_linear_prefix(gmax3):
    s = np.arange(8.0)
    rep = cauchy_report(gmax3, s, 0)
    assert rep.two_index_sup == 7.0  # largest gap between prefix points
    assert rep.full_sup == 7.0
    assert rep.amplification_ok


def test_cauchy_subsamples_beyond_cap():
    g = GnMetric(R, 4, "sum_pairwise")
    rep = cauchy_report(g, geometric(30), 0, exhaustive_cap=1000, subsample=500, seed=3)
    assert rep.full_mode == "subsampled" and rep.combinations == 500
    assert rep.amplification_ok
    again = cauchy_report(g, geometric(30), 0, exhaustive_cap=1000, subsample=500, seed=3)
    assert again == rep


@pytest.mark.parametrize("kind", ["max_pairwise", "sum_pairwise"])
@pytest.mark.parametrize("m", [3, 4])
def test_amplification_random_sequences(kind, m):
    g = GnMetric(R, m, kind)
    rng = np.random.default_rng(m)
    for _ in range(10):
        s = rng.normal() + rng.normal(size=12) * rng.uniform(0.2, 0.9) ** np.arange(12)
        assert cauchy_report(g, s, rng.integers(0, 6)).amplification_ok


def test_amplification_on_vectors():
    g = GnMetric(RealSpace(2, "euclidean"), 3, "max_pairwise")
    rng = np.random.default_rng(1)
    s = rng.normal(size=(15, 2)) * (0.7 ** np.arange(15))[:, None]
    assert cauchy_report(g, s, 2).amplification_ok


def test_continuity_shifted_sequences(gmax3):
    c = np.array([0.0, 1.0, 3.0])
    seqs = [ci + geometric(30) for ci in c]
    res = continuity_probe(gmax3, seqs, c)
    assert res.holds and res.worst_margin <= 0


def test_continuity_constant(gmax3):
    lim = [0.0, 1.0, 3.0]
    res = continuity_probe(gmax3, [[v] * 4 for v in lim], lim)
    assert res.holds and res.worst_margin == 0.0


def test_continuity_sum_random():
    g = GnMetric(R, 3, "sum_pairwise")
    rng = np.random.default_rng(5)
    lim = rng.uniform(-5, 5, 3)
    seqs = [li + rng.normal(size=40) * 0.8 ** np.arange(40) for li in lim]
    assert continuity_probe(g, seqs, lim).holds


def test_continuity_detects_discontinuous_table():
    # a table that jumps away from the limit tuple breaks the bound
    F = FiniteSpace.from_points([0.0, 1.0, 2.0], "absolute")

    def fn(*t):
        if len(set(t)) == 1:
            return 0.0
        return 5.0 if t == (0, 1, 1) else 1.0

    g = GnMetric.from_function(F, 3, fn)
    res = continuity_probe(g, [[0, 0], [1, 1], [2, 1]], [0, 1, 2])
    assert not res.holds and res.worst_index == 1 and res.worst_margin > 0


def test_continuity_shape_errors(gmax3):
    with pytest.raises(GnMetricError):
        continuity_probe(gmax3, [[0, 1]] * 2, [0, 0, 0])
    with pytest.raises(GnMetricError):
        continuity_probe(gmax3, [[0, 1], [0, 1], [0, 1, 2]], [0, 0, 0])
    with pytest.raises(GnMetricError):
        continuity_probe(gmax3, [[0, 1]] * 3, [0, 0])
