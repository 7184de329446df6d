"""Time the numba kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--sizes 1000 100000 1000000]
"""
import argparse
import timeit

import numpy as np

from gnmetric import _kernels as K

KINDS = {
    "max_pairwise": K.MAX_PAIRWISE,
    "sum_pairwise": K.SUM_PAIRWISE,
    "cyclic_max": K.CYCLIC_MAX,
    "cyclic_perimeter_avg": K.CYCLIC_PERIMETER_AVG,
}


def best_of(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--sizes", type=int, nargs="+", default=[1_000, 100_000, 1_000_000])
    ap.add_argument("--arity", type=int, default=4)
    args = ap.parse_args()

    if not K.HAS_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    K.warmup()
    rng = np.random.default_rng(0)
    n = args.arity
    pts64 = rng.normal(size=(64, 2))
    base = np.sqrt(((pts64[:, None] - pts64[None]) ** 2).sum(-1))

    print(f"{'kernel':<10} {'kind':<22} {'tuples':>9} {'numpy ms':>10} {'numba ms':>10} {'speedup':>8}")
    for size in args.sizes:
        idx = rng.integers(0, 64, size=(size, n))
        vec = rng.normal(size=(size, n, 3))
        for name, kind in KINDS.items():
            cases = [
                ("finite", lambda: K.finite_eval_numpy(base, idx, kind), lambda: K.finite_eval_numba(base, idx, kind)),
                ("vector", lambda: K.vector_eval_numpy(vec, kind, K.EUCLIDEAN),
                 lambda: K.vector_eval_numba(vec, kind, K.EUCLIDEAN)),
            ]
            for label, f_np, f_nb in cases:
                assert np.array_equal(f_np(), f_nb())
                t_np, t_nb = best_of(f_np, args.repeat), best_of(f_nb, args.repeat)
                print(f"{label:<10} {name:<22} {size:>9} {t_np * 1e3:>10.2f} {t_nb * 1e3:>10.2f} {t_np / t_nb:>7.1f}x")


if __name__ == "__main__":
    main()
