# splr_unmix/core/prox.py
"""
Proximal operators of the four terms of the unmixing cost, the weighted norms
and the composite objective. Everything here is a pure function of its inputs.
"""
import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional, Tuple, Union

import numpy as np
import scipy.linalg

from ..domain.errors import DimensionError, DomainError, NumericalError
from ..domain.types import WeightState

logger = logging.getLogger(__name__)

Threshold = Union[float, np.ndarray]


def as_dense(x, name: str = 'matrix') -> np.ndarray:
    """Validates a DenseMatrix: 2-D, non-empty, finite, float64."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2 or arr.size == 0:
        raise DimensionError(f"{name} must be a non-empty 2-D matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} contains NaN or Inf entries")
    return arr


def shrink(w: np.ndarray, delta: Threshold) -> np.ndarray:
    """Element-wise soft thresholding: sign(w) * max(0, |w| - delta)."""
    w = np.asarray(w, dtype=np.float64)
    delta = np.asarray(delta, dtype=np.float64)
    if delta.ndim and delta.shape != w.shape:
        raise DimensionError(f"threshold shape {delta.shape} does not match matrix shape {w.shape}")
    if np.any(delta < 0):
        raise DomainError("soft-thresholding requires nonnegative thresholds")
    return np.sign(w) * np.maximum(np.abs(w) - delta, 0.0)


def svd_signed(w: np.ndarray, iteration: Optional[int] = None) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Thin SVD with singular values in descending order and each left singular
    vector flipped so that its largest-magnitude entry is nonnegative.
    """
    try:
        u, s, vt = scipy.linalg.svd(w, full_matrices=False, lapack_driver='gesdd')
    except np.linalg.LinAlgError:
        try:
            u, s, vt = scipy.linalg.svd(w, full_matrices=False, lapack_driver='gesvd')
        except np.linalg.LinAlgError as e:
            raise NumericalError(f"SVD did not converge on a {w.shape[0]}x{w.shape[1]} matrix: {e}", iteration) from e
    pivots = np.argmax(np.abs(u), axis=0)
    signs = np.where(u[pivots, np.arange(u.shape[1])] < 0, -1.0, 1.0)
    return u * signs, s, vt * signs[:, None]


def singular_values(w: np.ndarray) -> np.ndarray:
    try:
        return scipy.linalg.svdvals(w)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"SVD did not converge: {e}") from e


def svt(w: np.ndarray, delta: Threshold, iteration: Optional[int] = None) -> np.ndarray:
    """
    Singular value thresholding: U diag(max(0, sigma_i - delta_i)) V^T.

    `delta` is a scalar or a vector aligned with the descending singular values;
    a vector shorter than min(rows, cols) is rejected rather than padded.
    """
    w = np.asarray(w, dtype=np.float64)
    m = min(w.shape)
    delta = np.asarray(delta, dtype=np.float64)
    if delta.ndim == 0:
        delta = np.full(m, float(delta))
    elif delta.shape != (m,):
        raise DimensionError(f"SVT needs {m} thresholds, got {delta.shape}")
    if np.any(delta < 0):
        raise DomainError("singular value thresholds must be nonnegative")
    u, s, vt = svd_signed(w, iteration)
    s_thr = np.maximum(s - delta, 0.0)
    keep = s_thr > 0
    return (u[:, keep] * s_thr[keep]) @ vt[keep]


def project_nonneg(w: np.ndarray) -> np.ndarray:
    return np.maximum(w, 0.0)


@dataclass(frozen=True)
class LsProxCache:
    """
    Quantities of the least squares prox that depend only on (Phi, Y, lambda):
    r = (Phi^T Phi + I / lambda)^-1, p = Phi^T Y, q = r p.
    """
    r: np.ndarray
    p: np.ndarray
    q: np.ndarray
    lam: float

    @classmethod
    def build(cls, phi: np.ndarray, y: np.ndarray, lam: float) -> 'LsProxCache':
        phi, y = as_dense(phi, 'phi'), as_dense(y, 'y')
        if phi.shape[0] != y.shape[0]:
            raise DimensionError(f"phi has {phi.shape[0]} bands but y has {y.shape[0]}")
        if lam <= 0:
            raise DomainError(f"lambda must be > 0, got {lam}")
        r = spd_inverse(phi.T @ phi + np.eye(phi.shape[1]) / lam)
        p = phi.T @ y
        q = r @ p
        for arr in (r, p, q):
            arr.setflags(write=False)
        return cls(r=r, p=p, q=q, lam=float(lam))


def spd_inverse(g: np.ndarray) -> np.ndarray:
    """Inverse of a symmetric positive definite matrix via Cholesky, symmetrized."""
    try:
        factor = scipy.linalg.cho_factor(g, lower=True)
    except np.linalg.LinAlgError as e:
        raise NumericalError(f"matrix is not positive definite: {e}") from e
    inv = scipy.linalg.cho_solve(factor, np.eye(g.shape[0]))
    return 0.5 * (inv + inv.T)


def prox_ls(cache: LsProxCache, w: np.ndarray) -> np.ndarray:
    """prox of lambda * 0.5 ||Y - Phi W||_F^2 evaluated at w: q + r w / lambda."""
    if w.shape != cache.q.shape:
        raise DimensionError(f"iterate must be {cache.q.shape[0]}x{cache.q.shape[1]}, got {w.shape}")
    return cache.q + (cache.r @ w) / cache.lam


def weighted_l1(w: np.ndarray, a: np.ndarray) -> float:
    if a.shape != w.shape:
        raise DimensionError(f"weight matrix shape {a.shape} does not match {w.shape}")
    return float(np.sum(a * np.abs(w)))


def weighted_nuclear(w: np.ndarray, b: np.ndarray) -> float:
    s = singular_values(w)
    if b.shape != s.shape:
        raise DimensionError(f"nuclear weights must have length {s.size}, got {b.shape}")
    return float(np.dot(b, s))


class ObjectiveValue(NamedTuple):
    value: float
    feasible: bool


def objective(phi: np.ndarray, y: np.ndarray, w: np.ndarray, gamma: float, tau: float,
              weights: Optional[WeightState] = None) -> ObjectiveValue:
    """
    0.5 ||Y - Phi W||_F^2 + gamma ||A . W||_1 + tau ||W||_{b,*}. The indicator of
    the nonnegative orthant is reported as the `feasible` flag.
    """
    if phi.shape[0] != y.shape[0] or phi.shape[1] != w.shape[0] or y.shape[1] != w.shape[1]:
        raise DimensionError(f"inconsistent shapes phi {phi.shape}, y {y.shape}, w {w.shape}")
    if gamma < 0 or tau < 0:
        raise DomainError("gamma and tau must be nonnegative")
    if weights is None:
        weights = WeightState.uniform(*w.shape)
    value = 0.5 * float(np.sum((y - phi @ w) ** 2))
    if gamma > 0:
        value += gamma * weighted_l1(w, weights.a)
    if tau > 0:
        value += tau * weighted_nuclear(w, weights.b)
    return ObjectiveValue(value=value, feasible=bool(np.all(w >= 0)))
