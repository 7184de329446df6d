"""The numba and numpy kernels must agree bit for bit."""
import os
import subprocess
import sys

import numpy as np
import pytest

from gnmetric import _kernels

KINDS = [_kernels.MAX_PAIRWISE, _kernels.SUM_PAIRWISE, _kernels.CYCLIC_MAX, _kernels.CYCLIC_PERIMETER_AVG]

needs_numba = pytest.mark.skipif(not _kernels.HAS_NUMBA, reason="numba not installed")


@needs_numba
@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("n", [3, 4, 7])
def test_finite_backends_identical(kind, n):
    rng = np.random.default_rng(n)
    pts = rng.normal(size=(20, 2))
    base = np.sqrt(((pts[:, None] - pts[None]) ** 2).sum(-1))
    idx = rng.integers(0, 20, size=(500, n))
    a = _kernels.finite_eval_numpy(base, idx, kind)
    b = _kernels.finite_eval_numba(base, idx, kind)
    assert np.array_equal(a, b)


@needs_numba
@pytest.mark.parametrize("kind", KINDS)
@pytest.mark.parametrize("norm", [_kernels.EUCLIDEAN, _kernels.CHEBYSHEV])
@pytest.mark.parametrize("dim", [1, 3])
def test_vector_backends_identical(kind, norm, dim):
    rng = np.random.default_rng(dim)
    pts = rng.uniform(-100, 100, size=(400, 5, dim))
    assert np.array_equal(
        _kernels.vector_eval_numpy(pts, kind, norm), _kernels.vector_eval_numba(pts, kind, norm)
    )


@needs_numba
@pytest.mark.parametrize("kind", KINDS)
def test_absolute_norm_identical(kind):
    pts = np.random.default_rng(3).uniform(-1e6, 1e6, size=(300, 4, 1))
    assert np.array_equal(
        _kernels.vector_eval_numpy(pts, kind, _kernels.ABSOLUTE),
        _kernels.vector_eval_numba(pts, kind, _kernels.ABSOLUTE),
    )


def test_backend_flag_is_reported():
    assert _kernels.BACKEND in ("numba", "numpy")
    assert _kernels.USE_NUMBA == (_kernels.BACKEND == "numba")


@pytest.mark.parametrize("size", [1, _kernels.SMALL_BATCH - 1, _kernels.SMALL_BATCH, 1000])
def test_dispatch_agrees_across_batch_sizes(size):
    pts = np.random.default_rng(size).normal(size=(size, 4, 2))
    ref = _kernels.vector_eval_numpy(pts, _kernels.SUM_PAIRWISE, _kernels.EUCLIDEAN)
    assert np.array_equal(_kernels.vector_eval(pts, _kernels.SUM_PAIRWISE, _kernels.EUCLIDEAN), ref)


def test_disable_flag_selects_numpy():
    code = "from gnmetric import _kernels; print(_kernels.BACKEND)"
    env = {**os.environ, "GNMETRIC_DISABLE_NUMBA": "1"}
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
