# splr_unmix/unmix.py
import logging
import os
import time
from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from .core.prox import as_dense
from .core.weights import clipped_ls
from .domain.enums import BoundaryMode, SolverKind
from .domain.errors import ConfigError, DimensionError, RangeError, SplrError
from .domain.types import AbundanceCube, HsiCube, SolverConfig, WindowSpec
from .solvers import make_solver

logger = logging.getLogger(__name__)

PROGRESS_EVERY = 500


def resolve_threads(threads: Optional[int] = None) -> int:
    """Explicit value, then SPLR_THREADS, then every available core."""
    if threads is None:
        env = os.environ.get('SPLR_THREADS')
        if env:
            try:
                threads = int(env)
            except ValueError:
                raise ConfigError(f"SPLR_THREADS must be an integer, got {env!r}") from None
    if threads is None or threads <= 0:
        threads = os.cpu_count() or 1
    return threads


def fold_indices(idx: np.ndarray, size: int) -> np.ndarray:
    """Symmetric reflection about the first and last index (no edge repetition), repeated as needed."""
    if size == 1:
        return np.zeros_like(idx)
    period = 2 * (size - 1)
    idx = np.mod(idx, period)
    return np.where(idx >= size, period - idx, idx)


def window_indices(center: int, size: int, spec: WindowSpec) -> np.ndarray:
    offsets = center + np.arange(-spec.half, spec.half + 1)
    if spec.boundary == BoundaryMode.CLAMP:
        return np.clip(offsets, 0, size - 1)
    if spec.boundary == BoundaryMode.SHRINK:
        if offsets[0] < 0 or offsets[-1] >= size:
            raise RangeError(f"centre {center} is within {spec.half} pixels of the border (shrink mode)")
        return offsets
    return fold_indices(offsets, size)


def extract_window(cube: HsiCube, row: int, col: int, spec: WindowSpec) -> np.ndarray:
    """L x K block of the window centred at (row, col), pixels in row-major window order."""
    if not (0 <= row < cube.height and 0 <= col < cube.width):
        raise RangeError(f"pixel ({row}, {col}) is outside the {cube.height}x{cube.width} image")
    rows = window_indices(row, cube.height, spec)
    cols = window_indices(col, cube.width, spec)
    return cube.data[:, rows[:, None], cols[None, :]].reshape(cube.bands, spec.k)


def solve_window(phi: np.ndarray, block: np.ndarray, kind: SolverKind, cfg: SolverConfig,
                 center: int) -> Tuple[np.ndarray, Dict[str, Any]]:
    """Central abundance column of one window; a failed solve falls back to clipped least squares."""
    try:
        report = make_solver(kind, phi, block, cfg).solve()
        return report.w_hat[:, center].copy(), {**report.summary(), 'failed': False}
    except (SplrError, np.linalg.LinAlgError, FloatingPointError) as e:
        logger.warning(f"Window solve failed ({e}); falling back to clipped least squares.")
        fallback = clipped_ls(phi, block)[:, center]
        return fallback, {'iterations': 0, 'termination': 'failed', 'objective': float('nan'), 'failed': True}


def _solve_row(phi, blocks, kind, cfg, center):
    return [solve_window(phi, block, kind, cfg, center) for block in blocks]


@dataclass
class UnmixResult:
    abundances: AbundanceCube
    diagnostics: pd.DataFrame
    row_offset: int = 0  # first unmixed row/col; nonzero only in shrink mode


class UnmixController:
    """Runs a solver over every window of a cube and keeps each window's central abundance vector."""
    def __init__(self, config: dict):
        self.config = config
        self.kind = SolverKind(config.get('solver', SolverKind.ADSPLRU.value))
        self.window = WindowSpec(kappa=config.get('kappa', 3), boundary=config.get('boundary', BoundaryMode.MIRROR))
        solver_params = config.get('solver_params', {})
        self.solver_config = solver_params if isinstance(solver_params, SolverConfig) else SolverConfig.from_dict(solver_params)
        self.threads = resolve_threads(config.get('threads'))
        if self.window.boundary == BoundaryMode.MIRROR:
            logger.info("Border windows are completed by mirror reflection.")

    def _centers(self, cube: HsiCube) -> Tuple[range, range]:
        if self.window.boundary == BoundaryMode.SHRINK:
            h = self.window.half
            rows, cols = range(h, cube.height - h), range(h, cube.width - h)
            if not rows or not cols:
                raise ConfigError(f"a {cube.height}x{cube.width} image has no interior pixel for kappa={self.window.kappa}")
            return rows, cols
        return range(cube.height), range(cube.width)

    def run(self, cube: HsiCube, phi: np.ndarray) -> UnmixResult:
        """Unmixes every window; the result does not depend on the worker count."""
        start_time = time.time()
        phi = as_dense(phi, 'dictionary')
        if cube.bands != phi.shape[0]:
            raise DimensionError(f"cube has {cube.bands} bands but the dictionary has {phi.shape[0]} rows")
        rows, cols = self._centers(cube)
        center = self.window.center_column
        logger.info(f"Unmixing {len(rows)}x{len(cols)} windows (kappa={self.window.kappa}, "
                    f"{self.kind.value}, {self.threads} worker(s))")

        def row_task(r):
            blocks = [extract_window(cube, r, c, self.window) for c in cols]
            return delayed(_solve_row)(phi, blocks, self.kind, self.solver_config, center)

        if self.threads == 1:
            results = (_solve_row(phi, [extract_window(cube, r, c, self.window) for c in cols],
                                  self.kind, self.solver_config, center) for r in rows)
        else:
            results = Parallel(n_jobs=self.threads, return_as='generator')(row_task(r) for r in rows)

        data = np.zeros((phi.shape[1], len(rows), len(cols)))
        records: List[Dict[str, Any]] = []
        count = 0
        for i, row_results in enumerate(results):
            for j, (vector, summary) in enumerate(row_results):
                data[:, i, j] = vector
                records.append({'row': rows[i], 'col': cols[j], **summary})
                count += 1
                if count % PROGRESS_EVERY == 0:
                    logger.info(f"Processed {count} windows...")

        diagnostics = pd.DataFrame.from_records(records)
        diagnostics['boundary'] = self.window.boundary.value
        failures = int(diagnostics['failed'].sum()) if len(diagnostics) else 0
        if failures:
            logger.warning(f"{failures} window(s) fell back to clipped least squares.")
        logger.info(f"Unmixing finished. Processed {count} windows in {time.time() - start_time:.2f}s.")
        return UnmixResult(abundances=AbundanceCube(data), diagnostics=diagnostics, row_offset=rows[0])


def unmix_cube(cube: HsiCube, phi: np.ndarray, spec: WindowSpec, cfg: SolverConfig,
               solver=SolverKind.ADSPLRU, threads: Optional[int] = None) -> UnmixResult:
    config = {'solver': SolverKind(solver).value, 'kappa': spec.kappa, 'boundary': spec.boundary,
              'solver_params': cfg, 'threads': threads}
    return UnmixController(config).run(cube, phi)
