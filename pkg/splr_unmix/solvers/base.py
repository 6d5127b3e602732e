# splr_unmix/solvers/base.py
import abc
import logging
from typing import Optional

import numpy as np

from ..core.prox import as_dense, objective
from ..core.weights import ls_estimate, update_weights
from ..domain.enums import SolverKind, WeightMode
from ..domain.errors import DimensionError, DivergenceError, DomainError
from ..domain.types import SolveReport, SolverConfig, WeightState

logger = logging.getLogger(__name__)


def relative_change(w_new: np.ndarray, w_old: np.ndarray) -> float:
    """||W_new - W_old||_F^2 / ||W_old||_F^2, with 0/0 read as no change."""
    denom = float(np.sum(w_old ** 2))
    diff = float(np.sum((w_new - w_old) ** 2))
    if denom == 0.0:
        return 0.0 if diff == 0.0 else float('inf')
    return diff / denom


class Solver(abc.ABC):
    """Abstract base class for the abundance matrix solvers of one pixel block."""
    kind: SolverKind

    def __init__(self, phi: np.ndarray, y: np.ndarray, config: SolverConfig):
        self.phi = as_dense(phi, 'phi')
        self.y = as_dense(y, 'y')
        if self.phi.shape[0] != self.y.shape[0]:
            raise DimensionError(f"dictionary has {self.phi.shape[0]} bands but the block has {self.y.shape[0]}")
        if np.any(self.phi < 0):
            raise DomainError("the endmember dictionary must be nonnegative")
        self.config = config
        self.n_bands, self.n_endmembers = self.phi.shape
        self.n_pixels = self.y.shape[1]
        self.solver_id = f"{self.__class__.__name__}_{self.n_endmembers}x{self.n_pixels}"
        self._w_ls: Optional[np.ndarray] = None

    @property
    def w_ls(self) -> np.ndarray:
        """Least squares estimate, computed on first use."""
        if self._w_ls is None:
            self._w_ls = ls_estimate(self.phi, self.y)
        return self._w_ls

    def _initial_weights(self) -> WeightState:
        mode = self.config.weight_mode
        if mode == WeightMode.FIXED_LS or mode == WeightMode.REWEIGHTED:
            return update_weights(self.w_ls, mode, self.config.epsilon)
        return WeightState.uniform(self.n_endmembers, self.n_pixels)

    def _refresh_weights(self, w: np.ndarray, weights: WeightState) -> WeightState:
        if self.config.weight_mode == WeightMode.REWEIGHTED:
            return update_weights(w, WeightMode.REWEIGHTED, self.config.epsilon)
        return weights

    def _check_finite(self, w: np.ndarray, iteration: int):
        if not np.all(np.isfinite(w)):
            raise DivergenceError(f"[{self.solver_id}] iterate became non-finite", iteration)

    def _check_shape(self, w: np.ndarray, name: str):
        if w.shape != (self.n_endmembers, self.n_pixels):
            raise DimensionError(f"{name} must be {self.n_endmembers}x{self.n_pixels}, got {w.shape}")

    def _objective(self, w: np.ndarray, weights: WeightState) -> float:
        return objective(self.phi, self.y, w, self.config.gamma, self.config.tau, weights).value

    @abc.abstractmethod
    def solve(self, init=None) -> SolveReport:
        """Runs the solver to termination and returns its report."""
        raise NotImplementedError
