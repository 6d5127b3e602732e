# splr_unmix/solvers/ipsplru.py
import logging
from typing import Optional

import numpy as np

from .base import Solver, relative_change
from ..core.prox import LsProxCache, as_dense, project_nonneg, prox_ls, shrink, svt
from ..domain.enums import SolverKind, Termination
from ..domain.types import SolveReport, SolverConfig

logger = logging.getLogger(__name__)


class IPSpLRUSolver(Solver):
    """
    Incremental proximal solver: each iteration cycles through the proxes of the
    least squares term, the weighted l1 norm, the weighted nuclear norm and the
    nonnegativity indicator, all taken with the same step lambda_t, so the
    shrinkages use lambda_t*gamma*A and lambda_t*tau*b.

    A fixed-step cycle settles a distance O(lambda_t) away from the minimizer, so
    once a stage settles the step is multiplied by `lam_decay` until it reaches
    `lam_min`. The stage tolerance shrinks with lambda_t^2 as well. With
    `literal_paper_thresholds` the thresholds stay gamma*A and tau*b and the step
    stays at `lam`.
    """
    kind = SolverKind.IPSPLRU

    def solve(self, init: Optional[np.ndarray] = None) -> SolveReport:
        cfg = self.config
        literal = cfg.literal_paper_thresholds
        step = cfg.lam
        cache = LsProxCache.build(self.phi, self.y, step)
        if init is None:
            w = project_nonneg(self.w_ls)
        else:
            w = as_dense(init, 'w0').copy()
            self._check_shape(w, 'w0')
        weights = self._initial_weights()

        report = SolveReport(w_hat=w, iterations=0, termination=Termination.MAX_ITERS,
                             iterate_trace=[] if cfg.record_iterates else None)
        for t in range(1, cfg.max_iters + 1):
            weights = self._refresh_weights(w, weights)
            scale = 1.0 if literal else step
            w_prev = w
            w = prox_ls(cache, w)
            if cfg.gamma > 0:
                w = shrink(w, scale * cfg.gamma * weights.a)
            if cfg.tau > 0:
                w = svt(w, scale * cfg.tau * weights.b, iteration=t)
            w = project_nonneg(w)
            self._check_finite(w, t)

            rel = relative_change(w, w_prev)
            report.rel_change_trace.append(rel)
            if cfg.record_objective:
                report.objective_trace.append(self._objective(w, weights))
            if report.iterate_trace is not None:
                report.iterate_trace.append(w.copy())
            report.iterations = t
            if rel < cfg.ip_tol * (step / cfg.lam) ** 2:
                if literal or step <= cfg.lam_min or cfg.lam_decay == 1.0:
                    report.termination = Termination.TOLERANCE
                    break
                step *= cfg.lam_decay
                cache = LsProxCache.build(self.phi, self.y, step)
                logger.debug(f"[{self.solver_id}] step lowered to {step:.3g} at iteration {t}.")

        report.w_hat = w
        logger.debug(f"[{self.solver_id}] stopped after {report.iterations} iterations ({report.termination.value}).")
        return report


def ipsplru_solve(phi: np.ndarray, y: np.ndarray, cfg: SolverConfig,
                  w0: Optional[np.ndarray] = None) -> SolveReport:
    """Functional entry point; `w0` defaults to the clipped least squares estimate."""
    return IPSpLRUSolver(phi, y, cfg).solve(w0)
