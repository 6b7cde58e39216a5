import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from adjmm.estimator_two import run_two
from adjmm.operator import dense_pair
from adjmm.oracle import (
    adjointness_test,
    golden_section_max,
    grid_maximize,
    grid_maximize_2d,
    grid_maximize_q,
    jacobi_svd,
)
from adjmm.runner import RunConfig
from adjmm.sampling import make_rng

from helpers import from_abcd


def power_sigma1(M, iters=5000):
    v = np.ones(M.shape[1]) / math.sqrt(M.shape[1])
    for _ in range(iters):
        w = M.T @ (M @ v)
        v = w / np.linalg.norm(w)
    return float(np.linalg.norm(M @ v))


def test_svd_diag():
    s = jacobi_svd(np.diag([3.0, 1.0]))
    assert np.allclose(s.sigma, [3.0, 1.0], atol=1e-15)


def test_svd_nilpotent():
    s = jacobi_svd(np.array([[0.0, 1.0], [0.0, 0.0]]))
    assert np.allclose(s.sigma, [1.0, 0.0], atol=1e-15)


def test_svd_power_iteration(gauss):
    M = gauss(7, 5, seed=4)
    assert abs(jacobi_svd(M).sigma1 - power_sigma1(M)) <= 1e-8


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 12), st.integers(1, 12), st.integers(0, 2**32))
def test_svd_reconstruction(m, d, seed):
    M = make_rng(seed).standard_normal((m, d))
    s = jacobi_svd(M)
    k = min(m, d)
    assert s.sigma.shape == (k,)
    assert np.all(np.diff(s.sigma) <= 0) and np.all(s.sigma >= 0)
    assert np.allclose(s.left_vectors.T @ s.left_vectors, np.eye(k), atol=1e-12)
    assert np.allclose(s.right_vectors.T @ s.right_vectors, np.eye(k), atol=1e-12)
    for i in range(k):
        r = M @ s.right_vectors[:, i] - s.sigma[i] * s.left_vectors[:, i]
        assert np.linalg.norm(r) <= 1e-10 * s.sigma1
    assert np.allclose(s.sigma, np.linalg.svd(M, compute_uv=False), rtol=0, atol=1e-12 * s.sigma1)


def test_svd_rank_deficient(gauss):
    M = gauss(30, 4) @ gauss(4, 20, seed=1)
    s = jacobi_svd(M)
    assert np.all(s.sigma[4:] <= 1e-12 * s.sigma1)
    assert np.allclose(s.left_vectors.T @ s.left_vectors, np.eye(20), atol=1e-10)


def test_svd_rejects_bad_input():
    with pytest.raises(ValueError):
        jacobi_svd(np.ones(3))
    with pytest.raises(ValueError):
        jacobi_svd(np.array([[np.inf, 0.0], [0.0, 1.0]]))


def test_sigma1_bounds_estimator_runs():
    rng = make_rng(77)
    for trial in range(100):
        m, d = rng.integers(2, 30, size=2)
        A = rng.standard_normal((m, d))
        sigma1 = jacobi_svd(A).sigma1
        rep = run_two(dense_pair(A, np.zeros_like(A)), RunConfig(max_iters=60, seed=trial))
        assert max(r.objective for r in rep.trace) <= sigma1 + 1e-9


def test_golden_section_parabola():
    x, fx = golden_section_max(lambda t: -(t - 0.3) ** 2, -2, 2, tol=1e-12)
    assert abs(x - 0.3) <= 1e-6 and abs(fx) <= 1e-12


def test_grid_flat():
    g = grid_maximize(lambda t: np.full_like(t, 2.0), -1, 1, 11)
    assert g.flat and g.value == 2.0
    g2 = grid_maximize_2d(lambda t, s: np.ones((t.size, s.size)), -1, 1, 11)
    assert g2.flat
    with pytest.raises(ValueError):
        grid_maximize(np.sin, 0, 1, 2)


def test_grid_q_examples():
    g = grid_maximize_q(*from_abcd(1, 1, 0, 0))
    assert abs(g.tau - 1) <= 1e-6 and abs(g.xi) <= 1e-6 and abs(g.value - 2) <= 1e-10
    g = grid_maximize_q(*from_abcd(1, 0, 0, 0))
    assert abs(g.value - 1) <= 1e-12


def test_adjointness_examples(gauss):
    A = gauss(6, 4)
    exact = dense_pair(A, A)
    assert adjointness_test(exact.fwd, exact.adj, 20, make_rng(0)) <= 1e-12
    off = dense_pair(np.diag([1.0, 0.0]), np.zeros((2, 2)))
    assert adjointness_test(off.fwd, off.adj, 20, make_rng(0)) > 0.1
    with pytest.raises(ValueError):
        adjointness_test(exact.fwd, exact.adj, 0, make_rng(0))
