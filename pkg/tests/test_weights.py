# tests/test_weights.py
import numpy as np
import pytest
from numpy.testing import assert_allclose

from splr_unmix.core.weights import clipped_ls, ls_estimate, nnls_columns, update_weights
from splr_unmix.domain.enums import WeightMode
from splr_unmix.domain.errors import DomainError

EPS = 1e-16


def test_zero_entry_gets_capped_weight():
    w = np.array([[0.0, 1.0], [2.0, -0.5]])
    state = update_weights(w, WeightMode.REWEIGHTED, EPS)
    assert state.a[0, 0] == pytest.approx(1.0 / EPS)
    assert state.a[1, 1] == pytest.approx(1.0 / EPS)
    assert state.a[1, 0] == pytest.approx(0.5)


def test_scaled_identity_closed_form():
    c = 0.25
    state = update_weights(c * np.eye(3), WeightMode.FIXED_LS, EPS)
    assert_allclose(np.diag(state.a), 1.0 / (c + EPS))
    assert_allclose(state.b, 1.0 / (c + EPS))
    assert state.mode == WeightMode.FIXED_LS


def test_nuclear_weights_follow_singular_values(rng):
    w = rng.uniform(size=(5, 3))
    eps = 1e-3
    state = update_weights(w, WeightMode.REWEIGHTED, eps)
    s = np.linalg.svd(w, compute_uv=False)
    assert_allclose(state.b, 1.0 / (s + eps), atol=1e-10)
    assert np.all(np.diff(state.b) >= 0)


def test_uniform_mode_ignores_values(rng):
    state = update_weights(rng.normal(size=(4, 2)), 'uniform')
    assert_allclose(state.a, 1.0)
    assert_allclose(state.b, 1.0)


def test_epsilon_must_be_positive():
    with pytest.raises(DomainError):
        update_weights(np.ones((2, 2)), WeightMode.REWEIGHTED, 0.0)


def test_ls_estimate_orthonormal_dictionary(rng):
    q, _ = np.linalg.qr(rng.normal(size=(12, 4)))
    y = rng.normal(size=(12, 3))
    assert_allclose(ls_estimate(q, y), q.T @ y, atol=1e-10)


def test_ls_estimate_recovers_noiseless_truth(well_posed):
    phi, w, y = well_posed
    assert_allclose(ls_estimate(phi, y), w, atol=1e-8)


def test_ls_residual_is_orthogonal_to_range(rng):
    phi, y = rng.uniform(size=(15, 5)), rng.normal(size=(15, 4))
    w = ls_estimate(phi, y)
    assert np.linalg.norm(phi.T @ (y - phi @ w)) <= 1e-8


def test_rank_deficient_dictionary_gives_minimum_norm_solution(rng):
    base = rng.uniform(size=(10, 2))
    phi = np.column_stack([base, base[:, 0]])
    y = rng.normal(size=(10, 2))
    assert_allclose(ls_estimate(phi, y), np.linalg.pinv(phi) @ y, atol=1e-8)


def test_baselines_are_nonnegative(rng):
    phi, y = rng.uniform(size=(15, 5)), rng.normal(size=(15, 3))
    assert np.all(clipped_ls(phi, y) >= 0)
    w = nnls_columns(phi, y)
    assert w.shape == (5, 3)
    assert np.all(w >= 0)


def test_nnls_recovers_positive_truth(well_posed):
    phi, w, y = well_posed
    assert_allclose(nnls_columns(phi, y), w, atol=1e-8)
