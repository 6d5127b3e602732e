# splr_unmix/core/weights.py
import logging

import numpy as np
import scipy.linalg
import scipy.optimize

from .prox import as_dense, project_nonneg, singular_values
from ..domain.enums import WeightMode
from ..domain.errors import DimensionError, DomainError
from ..domain.types import WeightState

logger = logging.getLogger(__name__)

PINV_RCOND = 1e-10


def ls_estimate(phi: np.ndarray, y: np.ndarray) -> np.ndarray:
    """
    Unconstrained least squares estimate. Rank-deficient dictionaries get the
    minimum-norm solution, singular values below 1e-10 * sigma_max treated as zero.
    """
    phi, y = as_dense(phi, 'phi'), as_dense(y, 'y')
    if phi.shape[0] != y.shape[0]:
        raise DimensionError(f"phi has {phi.shape[0]} bands but y has {y.shape[0]}")
    w, _, rank, _ = scipy.linalg.lstsq(phi, y, cond=PINV_RCOND, lapack_driver='gelsd')
    if rank < phi.shape[1]:
        logger.debug(f"Dictionary is rank deficient ({rank} < {phi.shape[1]}); using minimum-norm solution.")
    return w


def clipped_ls(phi: np.ndarray, y: np.ndarray) -> np.ndarray:
    return project_nonneg(ls_estimate(phi, y))


def nnls_columns(phi: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Column-by-column nonnegative least squares."""
    phi, y = as_dense(phi, 'phi'), as_dense(y, 'y')
    return np.column_stack([scipy.optimize.nnls(phi, y[:, j])[0] for j in range(y.shape[1])])


def update_weights(w: np.ndarray, mode: WeightMode, epsilon: float = 1e-16) -> WeightState:
    """
    a_ij = 1 / (max(w_ij, 0) + eps), b_i = 1 / (sigma_i(w) + eps).

    For FIXED_LS the caller passes the least squares estimate, for REWEIGHTED the
    current iterate; UNIFORM ignores `w` apart from its shape. Negative entries are
    clipped so an entry at or below zero receives the capped weight 1 / eps.
    """
    mode = WeightMode(mode)
    if epsilon <= 0:
        raise DomainError(f"epsilon must be > 0, got {epsilon}")
    n, k = w.shape
    if mode == WeightMode.UNIFORM:
        return WeightState.uniform(n, k)
    a = 1.0 / (np.maximum(w, 0.0) + epsilon)
    b = 1.0 / (singular_values(w) + epsilon)
    return WeightState(a=a, b=b, mode=mode)
