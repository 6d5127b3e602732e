# tests/test_prox.py
import numpy as np
import pytest
from numpy.testing import assert_allclose

from splr_unmix.core.prox import (LsProxCache, objective, project_nonneg, prox_ls, shrink, singular_values,
                                  svd_signed, svt, weighted_l1, weighted_nuclear)
from splr_unmix.domain.errors import DimensionError, DomainError
from splr_unmix.domain.types import WeightState


def test_shrink_examples():
    assert_allclose(shrink(np.array([[3.0, -1.0]]), np.array([[2.0, 2.0]])), [[1.0, 0.0]])
    w = np.array([[0.5, -2.0], [0.0, 7.0]])
    assert_allclose(shrink(w, 0.0), w)


@pytest.mark.parametrize('seed', range(50))
def test_shrink_matches_scalar_grid_search(seed):
    rng = np.random.default_rng(seed)
    w = rng.normal(scale=2.0)
    delta = rng.uniform(0.0, 1.5)
    grid = np.arange(w - 2 * delta, w + 2 * delta + 1e-4, 1e-4)
    best = grid[np.argmin(0.5 * (grid - w) ** 2 + delta * np.abs(grid))]
    assert abs(shrink(np.array([[w]]), delta)[0, 0] - best) <= 1e-3


def test_shrink_is_nonexpansive(rng):
    x, y = rng.normal(size=(2, 200))
    delta = rng.uniform(0, 2, size=200)
    assert np.all(np.abs(shrink(x, delta) - shrink(y, delta)) <= np.abs(x - y) + 1e-15)


def test_shrink_rejects_bad_thresholds():
    with pytest.raises(DomainError):
        shrink(np.ones((2, 2)), -0.1)
    with pytest.raises(DimensionError):
        shrink(np.ones((2, 2)), np.ones((2, 3)))


def test_svt_diagonal_case():
    assert_allclose(svt(np.diag([5.0, 1.0]), np.array([2.0, 2.0])), np.diag([3.0, 0.0]), atol=1e-12)


def test_svt_zero_threshold_reconstructs(rng):
    w = rng.normal(size=(6, 4))
    assert_allclose(svt(w, np.zeros(4)), w, atol=1e-10)


@pytest.mark.parametrize('seed', range(50))
def test_svt_satisfies_nuclear_prox_optimality(seed):
    # X = prox(W) iff (W - X) / tau = U1 V1^T + Z with U1^T Z = 0, Z V1 = 0 and ||Z||_2 <= 1
    rng = np.random.default_rng(seed)
    w = rng.normal(size=(6, 4))
    tau = rng.uniform(0.1, 2.0)
    x = svt(w, tau)
    g = (w - x) / tau
    u, s, vt = np.linalg.svd(x, full_matrices=False)
    keep = s > 1e-9
    u1, v1 = u[:, keep], vt[keep].T
    assert_allclose(u1.T @ g @ v1, np.eye(int(keep.sum())), atol=1e-8)
    z = g - u1 @ v1.T
    assert np.linalg.norm(z, 2) <= 1.0 + 1e-8
    assert_allclose(u1.T @ z, 0.0, atol=1e-8)
    assert_allclose(z @ v1, 0.0, atol=1e-8)


def test_svt_rejects_short_threshold_vector(rng):
    with pytest.raises(DimensionError):
        svt(rng.normal(size=(5, 3)), np.ones(2))


def test_svt_is_nonexpansive(rng):
    for _ in range(20):
        x, y = rng.normal(size=(2, 5, 4))
        assert np.linalg.norm(svt(x, 0.7) - svt(y, 0.7)) <= np.linalg.norm(x - y) + 1e-12


def test_svd_signed_convention(rng):
    w = rng.normal(size=(7, 3))
    u, s, vt = svd_signed(w)
    assert np.all(np.diff(s) <= 0)
    pivots = np.argmax(np.abs(u), axis=0)
    assert np.all(u[pivots, np.arange(3)] >= 0)
    assert_allclose((u * s) @ vt, w, atol=1e-12)
    assert_allclose(singular_values(w), s)


def test_project_nonneg():
    w = np.array([[-1.0, 2.0]])
    assert_allclose(project_nonneg(w), [[0.0, 2.0]])
    assert_allclose(project_nonneg(project_nonneg(w)), project_nonneg(w))
    pos = np.array([[0.0, 3.0], [1.0, 2.0]])
    assert_allclose(project_nonneg(pos), pos)


def test_prox_ls_vanishing_step_is_identity(rng):
    phi, y, w = rng.uniform(size=(10, 4)), rng.uniform(size=(10, 3)), rng.uniform(size=(4, 3))
    cache = LsProxCache.build(phi, y, 1e-8)
    assert_allclose(prox_ls(cache, w), w, rtol=1e-4)


def test_prox_ls_identity_dictionary():
    w = np.arange(12.0).reshape(4, 3)
    cache = LsProxCache.build(np.eye(4), np.zeros((4, 3)), 1.0)
    assert_allclose(prox_ls(cache, w), w / 2)


@pytest.mark.parametrize('seed', range(50))
def test_prox_ls_matches_normal_equations(seed):
    rng = np.random.default_rng(seed)
    phi, y, w = rng.normal(size=(20, 5)), rng.normal(size=(20, 3)), rng.normal(size=(5, 3))
    lam = rng.uniform(0.1, 2.0)
    expected = np.linalg.solve(phi.T @ phi + np.eye(5) / lam, phi.T @ y + w / lam)
    assert_allclose(prox_ls(LsProxCache.build(phi, y, lam), w), expected, atol=1e-8)


def test_prox_cache_is_read_only(rng):
    cache = LsProxCache.build(rng.uniform(size=(6, 3)), rng.uniform(size=(6, 2)), 0.5)
    with pytest.raises(ValueError):
        cache.r[0, 0] = 1.0


def test_prox_cache_rejects_bad_inputs(rng):
    with pytest.raises(DomainError):
        LsProxCache.build(rng.uniform(size=(6, 3)), rng.uniform(size=(6, 2)), 0.0)
    with pytest.raises(DimensionError):
        LsProxCache.build(rng.uniform(size=(6, 3)), rng.uniform(size=(5, 2)), 0.5)


def test_objective_at_zero_and_without_regularization(rng):
    phi, y = rng.uniform(size=(8, 3)), rng.uniform(size=(8, 2))
    value, feasible = objective(phi, y, np.zeros((3, 2)), 0.4, 0.3)
    assert value == pytest.approx(0.5 * np.sum(y ** 2))
    assert feasible
    w = rng.normal(size=(3, 2))
    assert objective(phi, y, w, 0.0, 0.0).value == pytest.approx(0.5 * np.sum((y - phi @ w) ** 2))
    assert not objective(phi, y, w - 10.0, 0.0, 0.0).feasible


def test_objective_matches_direct_summation(rng):
    phi, y, w = rng.uniform(size=(10, 4)), rng.uniform(size=(10, 3)), rng.normal(size=(4, 3))
    weights = WeightState(a=rng.uniform(0.5, 2.0, size=(4, 3)), b=rng.uniform(0.5, 2.0, size=3))
    gamma, tau = 0.3, 0.7
    l1 = sum(weights.a[i, j] * abs(w[i, j]) for i in range(4) for j in range(3))
    nuclear = sum(bi * si for bi, si in zip(weights.b, np.linalg.svd(w, compute_uv=False)))
    expected = 0.5 * np.sum((y - phi @ w) ** 2) + gamma * l1 + tau * nuclear
    assert objective(phi, y, w, gamma, tau, weights).value == pytest.approx(expected, abs=1e-10)
    assert weighted_l1(w, weights.a) == pytest.approx(l1, abs=1e-12)
    assert weighted_nuclear(w, weights.b) == pytest.approx(nuclear, abs=1e-12)


def test_objective_rejects_inconsistent_shapes(rng):
    with pytest.raises(DimensionError):
        objective(rng.uniform(size=(8, 3)), rng.uniform(size=(8, 2)), np.zeros((3, 3)), 0.1, 0.1)
