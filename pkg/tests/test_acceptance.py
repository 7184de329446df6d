"""Acceptance criteria, one test each, at the stated tolerances.

Each test records a ``PASS``/``FAIL`` line; they are printed in the pytest
terminal summary and also when this file is run as a script.
"""
import time
from pathlib import Path

import numpy as np
import pytest

from gnmetric import (
    CommutationError,
    FiniteSpace,
    GnMetric,
    RealSpace,
    SamplePlan,
    SelfMap,
    SolverConfig,
    Witness,
    cauchy_report,
    check_ball_inclusion,
    check_g_axioms,
    check_inequality_prop,
    check_k_axioms,
    check_metric_axioms,
    solve_common_fixed_point,
    solve_quasi_contraction,
    uniqueness_probe,
)
from gnmetric.axiom_checker import violation_reproduces
from gnmetric.cli import main
from gnmetric.config import dumps_payload, load_config, read_payload

CONFIGS = Path(__file__).resolve().parent.parent / "configs"
R = RealSpace()
SEED = 20240611

RESULTS: dict[int, str] = {}


def record(num: int, title: str, ok: bool, detail: str) -> None:
    RESULTS[num] = f"[{'PASS' if ok else 'FAIL'}] criterion {num:2d}: {title} ({detail})"
    assert ok, RESULTS[num]


def real_pool(seed=SEED):
    return SamplePlan.uniform_pool(-10.0, 10.0, 64, seed, tuple_count=10_000).point_pool


def test_criterion_01_axiom_soundness():
    t0 = time.perf_counter()
    pool = real_pool()
    failures = []
    for kind in ("max_pairwise", "sum_pairwise"):
        for n in (3, 4, 5):
            rep = check_g_axioms(GnMetric(R, n, kind), SamplePlan(tuple_count=10_000, seed=SEED, point_pool=pool))
            if not rep.passed or rep.tuples_checked < 10_000:
                failures.append(f"{kind} n={n}")
        F = FiniteSpace.from_points([0.0, 0.5, 1.7, 3.0, 4.25, 8.0], "absolute")
        if not check_g_axioms(GnMetric(F, 3, kind), SamplePlan(mode="exhaustive")).passed:
            failures.append(f"{kind} finite")
    elapsed = time.perf_counter() - t0
    record(1, "G1-G5 soundness", not failures and elapsed <= 10.0, f"failures={failures}, {elapsed:.2f}s <= 10s")


def test_criterion_02_k_g_separation():
    P = GnMetric(R, 4, "cyclic_perimeter_avg")
    k_ok = check_k_axioms(P, SamplePlan(mode="exhaustive", point_pool=[0, 1, 2, 3])).passed
    exhaustive_g4 = check_g_axioms(P, SamplePlan(mode="exhaustive", point_pool=[0, 1, 2, 3]))["G4"].verdict
    w = check_g_axioms(P, SamplePlan(mode="exhaustive", point_pool=[0, 1, 2, 3], tuples=[[0, 1, 2, 3]]))["G4"].witness
    values = (w.lhs, w.rhs) if w else None
    ok = k_ok and exhaustive_g4 == "fail" and values == (1.5, 2.0)
    record(2, "K passes, G4 fails", ok, f"K={'pass' if k_ok else 'fail'}, G4 witness values={values}")


def test_criterion_03_planted_violations(tmp_path):
    parts, ok = [], True
    for name, axiom in (("planted_g2.yaml", "G2"), ("planted_g5.yaml", "G5"), ("perimeter_g4.yaml", "G4")):
        out = tmp_path / f"{axiom}.json"
        code = main(["check-axioms", "--which", "g", "--config", str(CONFIGS / name), "--out", str(out), "-q"])
        verdict = next(v for v in read_payload(out)["reports"][0]["verdicts"] if v["axiom"] == axiom)
        g = load_config(CONFIGS / name).metric
        reproduces = verdict["witness"] is not None and violation_reproduces(g, axiom, Witness(**verdict["witness"]))
        ok = ok and code == 1 and verdict["verdict"] == "fail" and reproduces
        parts.append(f"{axiom}: exit {code}, witness reproduces={reproduces}")
    record(3, "planted violations detected", ok, "; ".join(parts))


def test_criterion_04_swap_bound_and_balls():
    pool = real_pool(SEED + 1)
    bad = []
    for kind in ("max_pairwise", "sum_pairwise"):
        for n in (3, 4, 5):
            g = GnMetric(R, n, kind)
            plan = SamplePlan(tuple_count=10_000, seed=SEED, point_pool=pool)
            for rep in (check_inequality_prop(g, plan), check_ball_inclusion(g, plan, [0.5, 1, 2, 4, 8, 16, 32])):
                if not rep.passed:
                    bad.append(f"{rep.suite} {kind} n={n}")
    record(4, "swap bound and ball inclusion", not bad, f"violations={bad}, 1e4 samples each, atol 1e-9")


def test_criterion_05_derived_metric():
    g = GnMetric(R, 3, "max_pairwise")
    rng = np.random.default_rng(SEED)
    x, y = rng.uniform(-1e3, 1e3, size=(2, 1000))
    dg = g.derived_batch(x, y)
    rel = float(np.max(np.abs(dg - 2 * np.abs(x - y)) / (2 * np.abs(x - y))))
    pts = rng.uniform(-5, 5, size=(12, 2))
    F = FiniteSpace.from_points(pts, "euclidean")
    suite_ok = all(
        check_metric_axioms(GnMetric(F, 3, kind), SamplePlan(mode="exhaustive")).passed
        for kind in ("max_pairwise", "sum_pairwise")
    )
    record(5, "d_G correctness", rel <= 1e-12 and suite_ok, f"max rel err {rel:.1e} <= 1e-12, exhaustive metric suite={suite_ok}")


def test_criterion_06_theorem1_solver():
    g = GnMetric(R, 3, "max_pairwise")
    t0 = time.perf_counter()
    tr = solve_common_fixed_point(g, SelfMap.affine(0.5, 1.0), SelfMap.identity(), 0.0, 0.5, 1e-6)
    elapsed = time.perf_counter() - t0
    ys = np.array(tr.iterates)
    err = g.repeated(ys, np.full_like(ys, 2.0), 1)
    certs = np.array(tr.certificates)
    bound_ok = bool(np.all(err <= certs))
    tight = float(np.max(np.abs(err - certs) / certs))
    ok = tr.termination == "certified" and tr.T == 20 and abs(tr.u - 2) <= 2.0**-20 and bound_ok and tight <= 1e-12
    ok = ok and elapsed <= 1.0
    record(6, "common fixed point, g = id", ok, f"T={tr.T}, |u-2|={abs(tr.u - 2):.3e}, tightness {tight:.1e}, {elapsed * 1e3:.1f} ms")


def test_criterion_07_theorem1_nontrivial_g():
    g = GnMetric(R, 3, "max_pairwise")
    half = SelfMap.affine(0.5, preimage=SelfMap.affine(2.0))
    tr = solve_common_fixed_point(g, SelfMap.affine(0.25), half, 1.0, 0.5, 1e-9)
    converged = tr.certified and abs(tr.u) <= 1e-9
    shifted = SelfMap.affine(0.5, 1.0)
    shifted.preimage = shifted.inverse()
    try:
        solve_common_fixed_point(g, SelfMap.affine(0.25), shifted, 1.0, 0.5, 1e-9)
        rejected = False
    except CommutationError:
        rejected = True
    record(7, "common fixed point, g(x) = x/2", converged and rejected, f"u={tr.u:.2e}, non-commuting pair rejected={rejected}")


def test_criterion_08_theorem2_solver():
    g = GnMetric(R, 3, "max_pairwise")
    tr = solve_quasi_contraction(g, SelfMap.affine(1 / 3), 1.0, 1 / 3, 1e-8)
    t = np.arange(tr.T + 1)
    certs = np.array(tr.certificates)
    closed = np.allclose(certs, 4 / 3 * 2.0**-t, rtol=1e-12, atol=0)
    err = g.repeated(np.array(tr.iterates), np.zeros(tr.T + 1), 1)
    err_ok = bool(np.all(err <= certs)) and np.allclose(err, 3.0**-t, rtol=1e-12, atol=0)
    steps = np.array(tr.step_values)
    k = 1 / 3
    step_ok = bool(np.all(steps[1:] <= k / (1 - k) * steps[:-1] * (1 + 1e-12)))
    ok = tr.termination == "certified" and closed and err_ok and step_ok
    record(8, "quasi-contraction solver", ok, f"T={tr.T}, certificates closed-form={closed}, error<=cert={err_ok}, step ineq={step_ok}")


def test_criterion_09_uniqueness():
    g = GnMetric(R, 3, "max_pairwise")
    r1 = uniqueness_probe(g, SolverConfig(1, SelfMap.affine(0.5, 1.0), 1e-9, gmap=SelfMap.identity(), q=0.5), [-10.0, 0.0, 7.0], 1e-6)
    r2 = uniqueness_probe(g, SolverConfig(2, SelfMap.affine(1 / 3), 1e-9, k=1 / 3), [-1.0, 1.0, 5.0], 1e-6)
    ok = r1.unique and r2.unique
    record(9, "uniqueness probes", ok, f"max d_G {r1.max_pairwise:.1e} and {r2.max_pairwise:.1e} <= 1e-6")


def test_criterion_10_cauchy_amplification():
    rng = np.random.default_rng(SEED)
    violations, checked = 0, 0
    for i in range(100):
        rate = rng.uniform(0.1, 0.95)
        seq = rng.normal() + rng.normal(size=25) * rate ** np.arange(25)
        kind = ("max_pairwise", "sum_pairwise")[i % 2]
        for m in (3, 4):
            rep = cauchy_report(GnMetric(R, m, kind), seq, 10)
            checked += 1
            if rep.full_mode != "exhaustive" or not rep.amplification_ok:
                violations += 1
    record(10, "Cauchy amplification", violations == 0, f"{violations} violations over {checked} exhaustive reports")


CLI_SUITE = [
    ["check-axioms", "--config", "check_max3.yaml"],
    ["check-axioms", "--which", "g", "--config", "planted_g2.yaml"],
    ["check-axioms", "--which", "g", "--config", "planted_g5.yaml"],
    ["check-axioms", "--config", "perimeter_g4.yaml"],
    ["solve", "--theorem", "1", "--config", "solve_affine.yaml"],
    ["solve", "--theorem", "1", "--config", "solve_commuting.yaml"],
    ["solve", "--theorem", "1", "--config", "solve_noncommuting.yaml"],
    ["solve", "--theorem", "2", "--config", "solve_quasi.yaml"],
    ["analyze", "--analysis", "convergence", "--config", "converge.yaml"],
    ["analyze", "--analysis", "cauchy", "--config", "cauchy_linear.yaml"],
    ["analyze", "--analysis", "continuity", "--config", "continuity_const.yaml"],
    ["derive-metric", "--config", "derive.yaml"],
]


def test_criterion_11_determinism(tmp_path):
    runs = []
    for r in range(2):
        texts = []
        for i, argv in enumerate(CLI_SUITE):
            argv = [str(CONFIGS / a) if a.endswith(".yaml") else a for a in argv]
            out = tmp_path / f"run{r}" / f"{i}.json"
            main([*argv, "--out", str(out), "-q"])
            texts.append(dumps_payload(read_payload(out)))
        runs.append(texts)
    same = sum(a == b for a, b in zip(*runs))
    record(11, "byte-identical payloads", same == len(CLI_SUITE), f"{same}/{len(CLI_SUITE)} payloads identical")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
