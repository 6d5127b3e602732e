# splr_unmix/analysis/metrics.py
"""
Abundance error metrics. Estimates and truths are N x n arrays holding one
abundance vector per column (or AbundanceCubes, flattened row-major).

The RMSE is reported twice: in its printed form,
sqrt(sum_i ||w_hat_i - w_i||_2 / (N n)) with an unsquared inner norm, and in the
conventional form with squared norms. The SRE numerator is the mean power of the
*estimated* vectors.
"""
import logging
import math
from typing import List, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from ..domain.errors import ContractError, DimensionError
from ..domain.types import AbundanceCube, MetricReport, SolveReport

logger = logging.getLogger(__name__)

Vectors = Union[np.ndarray, AbundanceCube]


def _pair(est: Vectors, truth: Vectors) -> Tuple[np.ndarray, np.ndarray]:
    est = est.vectors() if isinstance(est, AbundanceCube) else np.asarray(est, dtype=np.float64)
    truth = truth.vectors() if isinstance(truth, AbundanceCube) else np.asarray(truth, dtype=np.float64)
    if est.ndim == 1:
        est = est[:, None]
    if truth.ndim == 1:
        truth = truth[:, None]
    if est.shape != truth.shape:
        raise DimensionError(f"estimate shape {est.shape} does not match truth shape {truth.shape}")
    if est.size == 0:
        raise DimensionError("no abundance vectors to compare")
    return est, truth


def rmse(est: Vectors, truth: Vectors) -> Tuple[float, float]:
    """(printed RMSE, conventional RMSE)."""
    est, truth = _pair(est, truth)
    n_endmembers, n_pixels = est.shape
    norms = np.linalg.norm(est - truth, axis=0)
    scale = n_endmembers * n_pixels
    return math.sqrt(float(np.sum(norms)) / scale), math.sqrt(float(np.sum(norms ** 2)) / scale)


def sre_db(est: Vectors, truth: Vectors) -> float:
    """10 log10(mean ||w_hat_i||^2 / mean ||w_hat_i - w_i||^2); +inf on exact recovery."""
    est, truth = _pair(est, truth)
    error = float(np.mean(np.sum((est - truth) ** 2, axis=0)))
    power = float(np.mean(np.sum(est ** 2, axis=0)))
    if error == 0.0:
        return math.inf
    if power == 0.0:
        return -math.inf
    return 10.0 * math.log10(power / error)


def metric_report(est: Vectors, truth: Vectors) -> MetricReport:
    printed, squared = rmse(est, truth)
    est_arr, _ = _pair(est, truth)
    return MetricReport(rmse=printed, rmse_squared_variant=squared, sre_db=sre_db(est, truth),
                        n_pixels=est_arr.shape[1])


def nmse_trace(reports: Sequence[SolveReport], truths: Sequence[np.ndarray]) -> np.ndarray:
    """
    NMSE(t) = (1/p) sum_i ||W_hat_i^t - W_i||_F^2 / ||W_i||_F^2. Runs that stopped
    early hold their final iterate for the remaining iterations.
    """
    if len(reports) != len(truths) or not reports:
        raise DimensionError(f"need one truth per report, got {len(reports)} reports and {len(truths)} truths")
    traces: List[np.ndarray] = []
    for i, (report, truth) in enumerate(zip(reports, truths)):
        if not report.iterate_trace:
            raise ContractError(f"report {i} has no recorded iterates (set record_iterates=True)")
        truth = np.asarray(truth, dtype=np.float64)
        denom = float(np.sum(truth ** 2))
        if denom == 0.0:
            raise DimensionError(f"truth {i} is all zeros; NMSE is undefined")
        traces.append(np.array([np.sum((w - truth) ** 2) / denom for w in report.iterate_trace]))
    length = max(len(t) for t in traces)
    padded = np.stack([np.pad(t, (0, length - len(t)), mode='edge') for t in traces])
    return padded.mean(axis=0)


def block_row_metrics(est: AbundanceCube, truth: AbundanceCube, block: int = 10) -> pd.DataFrame:
    """Metrics per row of blocks of the synthetic block image (rows numbered from 1)."""
    if est.data.shape != truth.data.shape:
        raise DimensionError(f"estimate cube {est.data.shape} does not match truth {truth.data.shape}")
    records = []
    for i in range(truth.height // block):
        sl = slice(i * block, (i + 1) * block)
        e = est.data[:, sl, :].reshape(est.endmembers, -1)
        t = truth.data[:, sl, :].reshape(truth.endmembers, -1)
        records.append({'block_row': i + 1, **metric_report(e, t).to_dict()})
    return pd.DataFrame.from_records(records)
