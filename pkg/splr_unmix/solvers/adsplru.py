# splr_unmix/solvers/adsplru.py
import dataclasses
import logging
import math
from typing import Optional

import numpy as np

from .base import Solver
from ..core.prox import as_dense, project_nonneg, shrink, spd_inverse, svt
from ..domain.enums import SolverKind, Termination
from ..domain.types import AdmmState, SolveReport, SolverConfig

logger = logging.getLogger(__name__)


class ADSpLRUSolver(Solver):
    """
    ADMM solver over the split W = Omega_2 = Omega_3 = Omega_4, Phi W = Omega_1 with
    scaled multipliers Lambda_i. The estimate returned is Omega_4, the iterate
    that is feasible by construction.
    """
    kind = SolverKind.ADSPLRU

    def thresholds(self):
        """Shrinkage scales for Omega_2 / Omega_3: gamma/mu and tau/mu, or gamma and tau in literal mode."""
        cfg = self.config
        if cfg.literal_paper_thresholds:
            return cfg.gamma, cfg.tau
        return cfg.gamma / cfg.mu, cfg.tau / cfg.mu

    def tolerance(self) -> float:
        """zeta = sqrt((3N + L) K) * zeta_rel."""
        return math.sqrt((3 * self.n_endmembers + self.n_bands) * self.n_pixels) * self.config.admm_rel_tol

    def solve(self, init: Optional[AdmmState] = None) -> SolveReport:
        cfg = self.config
        phi, y, mu = self.phi, self.y, cfg.mu
        if init is None:
            state = AdmmState.zeros(self.n_bands, self.n_endmembers, self.n_pixels)
        else:
            state = dataclasses.replace(init, **{f.name: as_dense(getattr(init, f.name), f.name).copy()
                                                for f in dataclasses.fields(init) if f.name != 'r_cached'})
            state.check_dims(self.n_bands, self.n_endmembers, self.n_pixels)
        state.r_cached = spd_inverse(phi.T @ phi + 3.0 * np.eye(self.n_endmembers))
        r = state.r_cached

        gamma_eff, tau_eff = self.thresholds()
        zeta = self.tolerance()
        weights = self._initial_weights()

        report = SolveReport(w_hat=state.omega4, iterations=0, termination=Termination.MAX_ITERS,
                             iterate_trace=[] if cfg.record_iterates else None)
        for t in range(1, cfg.max_iters + 1):
            s = state
            w = r @ (phi.T @ (s.omega1 + s.lambda1) + s.omega2 + s.lambda2
                     + s.omega3 + s.lambda3 + s.omega4 + s.lambda4)
            self._check_finite(w, t)
            weights = self._refresh_weights(w, weights)
            phi_w = phi @ w

            omega1 = (y + mu * (phi_w - s.lambda1)) / (1.0 + mu)
            omega2 = shrink(w - s.lambda2, gamma_eff * weights.a) if gamma_eff > 0 else w - s.lambda2
            omega3 = svt(w - s.lambda3, tau_eff * weights.b, iteration=t) if tau_eff > 0 else w - s.lambda3
            omega4 = project_nonneg(w - s.lambda4)

            # primal residual r = G W + B Omega, dual residual d = mu G^T B (Omega^t - Omega^{t-1})
            primal = math.sqrt(float(np.sum((phi_w - omega1) ** 2) + np.sum((w - omega2) ** 2)
                                     + np.sum((w - omega3) ** 2) + np.sum((w - omega4) ** 2)))
            dual = mu * float(np.linalg.norm(phi.T @ (omega1 - s.omega1) + (omega2 - s.omega2)
                                             + (omega3 - s.omega3) + (omega4 - s.omega4)))

            s.lambda1 = s.lambda1 - phi_w + omega1
            s.lambda2 = s.lambda2 - w + omega2
            s.lambda3 = s.lambda3 - w + omega3
            s.lambda4 = s.lambda4 - w + omega4
            s.w, s.omega1, s.omega2, s.omega3, s.omega4 = w, omega1, omega2, omega3, omega4

            report.residual_trace.append((primal, dual))
            if cfg.record_objective:
                report.objective_trace.append(self._objective(omega4, weights))
            if report.iterate_trace is not None:
                report.iterate_trace.append(omega4.copy())
            report.iterations = t
            if primal <= zeta and dual <= zeta:
                report.termination = Termination.TOLERANCE
                break

        report.w_hat = state.omega4
        logger.debug(f"[{self.solver_id}] stopped after {report.iterations} iterations "
                     f"({report.termination.value}, zeta={zeta:.3e}).")
        return report


def adsplru_solve(phi: np.ndarray, y: np.ndarray, cfg: SolverConfig,
                  init: Optional[AdmmState] = None) -> SolveReport:
    """Functional entry point; `init` defaults to the all-zeros state."""
    return ADSpLRUSolver(phi, y, cfg).solve(init)
