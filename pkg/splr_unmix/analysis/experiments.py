# splr_unmix/analysis/experiments.py
"""
Multi-trial experiment runner, the (tau, gamma) grid sweep and the experiment
presets. Every trial draws its dictionary, abundances and noise from a seed
derived from (base_seed, trial), so results do not depend on worker count.
"""
import dataclasses
import itertools
import logging
import time
from dataclasses import dataclass
from typing import Any, Callable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
import scipy.stats
from joblib import Parallel, delayed

from .metrics import block_row_metrics, metric_report, nmse_trace
from ..core.weights import clipped_ls, nnls_columns
from ..data.synth import (SyntheticProblem, build_block_image, hostable_level, make_problem,
                          sample_dictionary)
from ..domain.enums import (BoundaryMode, DictionarySource, NoiseKind, SolverKind, Variant,
                            VARIANT_NAMES, WeightMode)
from ..domain.errors import ConfigError, SplrError
from ..domain.types import AbundanceCube, SolverConfig, SweepGrid, WindowSpec
from ..solvers import make_solver
from ..unmix import unmix_cube

logger = logging.getLogger(__name__)

UNRELIABLE_FAILURE_SHARE = 0.1
SENSITIVITY_STRUCTURES = ((1.0, 1), (0.1, 4), (0.2, 5), (0.1, 9))  # (sparsity level, rank) of the sensitivity study


def derive_seed(base_seed: int, *keys: int) -> int:
    """Splittable seed: independent streams for every key path under one base seed."""
    return int(np.random.SeedSequence(base_seed, spawn_key=tuple(int(k) for k in keys)).generate_state(1)[0])


def run_trials(fn: Callable, arg_list: Sequence[Tuple], threads: int = 1) -> List[Any]:
    """Applies fn to each argument tuple; results come back in input order."""
    if threads == 1 or len(arg_list) <= 1:
        return [fn(*args) for args in arg_list]
    return Parallel(n_jobs=threads)(delayed(fn)(*args) for args in arg_list)


@dataclass(frozen=True)
class ProblemFactory:
    """Draws one noisy window problem per seed."""
    n: int = 50
    k: int = 9
    rank: int = 2
    sparsity_level: float = 0.2
    snr_db: float = 35.0
    noise_kind: NoiseKind = NoiseKind.WHITE
    ar_coefficient: float = 0.9
    bands: int = 224
    dictionary_source: DictionarySource = DictionarySource.SYNTHETIC_SMOOTH
    library_path: Optional[str] = None

    def __call__(self, seed: int) -> SyntheticProblem:
        phi = sample_dictionary(self.n, self.bands, self.dictionary_source, derive_seed(seed, 0), self.library_path)
        level = hostable_level(self.sparsity_level, self.n, self.rank)
        return make_problem(phi, self.k, self.rank, level, self.snr_db, seed=derive_seed(seed, 1),
                            noise_kind=self.noise_kind, ar_coefficient=self.ar_coefficient)


def default_config(**overrides) -> SolverConfig:
    """Experiment defaults: reweighted norms, ADMM penalty 1, no per-iteration objective."""
    params = {'weight_mode': WeightMode.REWEIGHTED, 'mu': 1.0, 'record_objective': False}
    params.update(overrides)
    return SolverConfig(**params)


def _solve_metrics(kind: SolverKind, problem: SyntheticProblem, cfg: SolverConfig) -> np.ndarray:
    try:
        report = make_solver(kind, problem.phi, problem.y, cfg).solve()
    except SplrError as e:
        logger.debug(f"{kind.value} failed at tau={cfg.tau:g}, gamma={cfg.gamma:g}: {e}")
        return np.full(3, np.nan)
    m = metric_report(report.w_hat, problem.w)
    return np.array([m.rmse, m.rmse_squared_variant, m.sre_db])


def _trial_cells(factory: ProblemFactory, seed: int, cells: Sequence[Tuple[float, float]],
                 kind: SolverKind, base: SolverConfig) -> np.ndarray:
    problem = factory(seed)
    return np.stack([_solve_metrics(kind, problem, dataclasses.replace(base, tau=tau, gamma=gamma))
                     for tau, gamma in cells])


@dataclass
class SweepResult:
    """Mean metrics per (tau, gamma) cell and the RMSE-minimizing cell."""
    surface: pd.DataFrame
    best_tau: float
    best_gamma: float

    @property
    def best(self) -> pd.Series:
        mask = (self.surface['tau'] == self.best_tau) & (self.surface['gamma'] == self.best_gamma)
        return self.surface[mask].iloc[0]

    def pivot(self, value: str = 'rmse') -> pd.DataFrame:
        return self.surface.pivot(index='tau', columns='gamma', values=value)


def sweep(factory: ProblemFactory, grid: SweepGrid, solver=SolverKind.ADSPLRU, trials: int = 100,
          base_config: Optional[SolverConfig] = None, base_seed: int = 0, threads: int = 1) -> SweepResult:
    """Mean RMSE/SRE over seeded trials for every (tau, gamma) cell of the grid."""
    if trials < 1:
        raise ConfigError(f"trials must be >= 1, got {trials}")
    kind = SolverKind(solver)
    base = base_config or default_config()
    cells = list(itertools.product(grid.tau_values, grid.gamma_values))
    seeds = [derive_seed(base_seed, t) for t in range(trials)]
    start_time = time.time()
    stack = np.stack(run_trials(_trial_cells, [(factory, s, cells, kind, base) for s in seeds], threads))

    failures = np.isnan(stack[:, :, 0]).sum(axis=0)
    with np.errstate(invalid='ignore'):
        means = np.array([[np.nan] * 3 if failures[c] == trials else np.nanmean(stack[:, c, :], axis=0)
                          for c in range(len(cells))])
    surface = pd.DataFrame({
        'tau': [c[0] for c in cells],
        'gamma': [c[1] for c in cells],
        'rmse': means[:, 0],
        'rmse_squared_variant': means[:, 1],
        'sre_db': means[:, 2],
        'failures': failures,
        'trials': trials,
    })
    surface['unreliable'] = surface['failures'] > UNRELIABLE_FAILURE_SHARE * trials
    if surface['unreliable'].any():
        logger.warning(f"{int(surface['unreliable'].sum())} sweep cell(s) failed in more than "
                       f"{UNRELIABLE_FAILURE_SHARE:.0%} of trials.")
    candidates = surface[~surface['unreliable'] & surface['rmse'].notna()]
    if candidates.empty:
        candidates = surface
    best = candidates.loc[candidates['rmse'].idxmin()] if candidates['rmse'].notna().any() else candidates.iloc[0]
    logger.info(f"Sweep of {len(cells)} cells x {trials} trials ({kind.value}) finished in "
                f"{time.time() - start_time:.2f}s; best tau={best['tau']:g}, gamma={best['gamma']:g}.")
    return SweepResult(surface=surface, best_tau=float(best['tau']), best_gamma=float(best['gamma']))


def variant_grid(grid: SweepGrid, variant: Variant) -> SweepGrid:
    if variant == Variant.LOW_RANK_ONLY:
        return SweepGrid(tau_values=grid.tau_values, gamma_values=(0.0,))
    if variant == Variant.SPARSE_ONLY:
        return SweepGrid(tau_values=(0.0,), gamma_values=grid.gamma_values)
    return grid


def sensitivity_ranges(result: SweepResult) -> Tuple[float, float]:
    """
    (RMSE range across gamma at the best tau, RMSE range across tau at the best gamma).
    A small first value means gamma hardly matters, and likewise for tau.
    """
    s = result.surface
    along_gamma = s[s['tau'] == result.best_tau]['rmse']
    along_tau = s[s['gamma'] == result.best_gamma]['rmse']
    return float(along_gamma.max() - along_gamma.min()), float(along_tau.max() - along_tau.min())


def toy_ablation(trials: int = 100, grid: Optional[SweepGrid] = None, base_seed: int = 0, threads: int = 1,
                 factory: Optional[ProblemFactory] = None,
                 base_config: Optional[SolverConfig] = None) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """
    Grid-tuned RMSE of the two solver families with both priors, low-rank only and
    sparse only (6 rows), plus |W_hat - W| of the first trial for every row.
    """
    grid = grid or SweepGrid()
    factory = factory or ProblemFactory(rank=2, sparsity_level=0.2, snr_db=35.0)
    base = base_config or default_config()
    first = factory(derive_seed(base_seed, 0))
    rows, residuals = [], []
    for kind in (SolverKind.IPSPLRU, SolverKind.ADSPLRU):
        for variant in (Variant.SPARSE_LOW_RANK, Variant.SPARSE_ONLY, Variant.LOW_RANK_ONLY):
            name = VARIANT_NAMES[(kind, variant)]
            result = sweep(factory, variant_grid(grid, variant), kind, trials, base, base_seed, threads)
            best = result.best
            rows.append({'algorithm': name, 'solver': kind.value, 'variant': variant.value,
                         'tau': result.best_tau, 'gamma': result.best_gamma, 'rmse': best['rmse'],
                         'rmse_squared_variant': best['rmse_squared_variant'], 'sre_db': best['sre_db']})
            cfg = dataclasses.replace(base, tau=result.best_tau, gamma=result.best_gamma)
            w_hat = make_solver(kind, first.phi, first.y, cfg).solve().w_hat
            resid = np.abs(w_hat - first.w)
            for (i, j), value in np.ndenumerate(resid):
                residuals.append({'algorithm': name, 'endmember': i, 'pixel': j, 'abs_residual': value})
            logger.info(f"{name}: tuned RMSE {best['rmse']:.4f} at tau={result.best_tau:g}, gamma={result.best_gamma:g}")
    return pd.DataFrame.from_records(rows), pd.DataFrame.from_records(residuals)


def _trial_nmse(factory: ProblemFactory, seed: int, kind: SolverKind, cfg: SolverConfig) -> np.ndarray:
    problem = factory(seed)
    report = make_solver(kind, problem.phi, problem.y, cfg).solve()
    return nmse_trace([report], [problem.w])


def reweighting_study(trials: int = 100, gamma: float = 3e-3, tau: float = 3e-3, max_iters: int = 2000,
                      base_seed: int = 0, threads: int = 1, factory: Optional[ProblemFactory] = None,
                      base_config: Optional[SolverConfig] = None) -> pd.DataFrame:
    """NMSE(t) for uniform, fixed least squares and reweighted norms, both solvers (long format)."""
    factory = factory or ProblemFactory(rank=3, sparsity_level=0.1, snr_db=30.0)
    base = base_config or default_config()
    seeds = [derive_seed(base_seed, t) for t in range(trials)]
    frames = []
    for kind in (SolverKind.IPSPLRU, SolverKind.ADSPLRU):
        for mode in WeightMode:
            cfg = dataclasses.replace(base, gamma=gamma, tau=tau, weight_mode=mode, max_iters=max_iters,
                                      record_objective=False, record_iterates=True)
            curves = run_trials(_trial_nmse, [(factory, s, kind, cfg) for s in seeds], threads)
            length = max(len(c) for c in curves)
            mean = np.stack([np.pad(c, (0, length - len(c)), mode='edge') for c in curves]).mean(axis=0)
            frames.append(pd.DataFrame({'solver': kind.value, 'weight_mode': mode.value,
                                        'iteration': np.arange(1, length + 1), 'nmse': mean}))
            logger.info(f"{kind.value}/{mode.value}: final NMSE {mean[-1]:.4e}")
    return pd.concat(frames, ignore_index=True)


def param_sweep(trials: int = 100, grid: Optional[SweepGrid] = None, structures=SENSITIVITY_STRUCTURES,
                base_seed: int = 0, threads: int = 1, snr_db: float = 35.0,
                base_config: Optional[SolverConfig] = None,
                factory: Optional[ProblemFactory] = None) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """
    RMSE surfaces over (tau, gamma) for several (sparsity, rank) structures and both
    solvers. `factory` fixes everything but the structure and the SNR.
    """
    grid = grid or SweepGrid()
    base = base_config or default_config()
    template = factory or ProblemFactory()
    surfaces, optima = [], []
    for level, rank in structures:
        structured = dataclasses.replace(template, rank=rank, sparsity_level=level, snr_db=snr_db)
        for kind in (SolverKind.IPSPLRU, SolverKind.ADSPLRU):
            result = sweep(structured, grid, kind, trials, base, base_seed, threads)
            labels = {'sparsity_level': level, 'rank': rank, 'solver': kind.value}
            surfaces.append(result.surface.assign(**labels))
            gamma_range, tau_range = sensitivity_ranges(result)
            optima.append({**labels, 'best_tau': result.best_tau, 'best_gamma': result.best_gamma,
                           'best_rmse': result.best['rmse'], 'rmse_range_over_gamma': gamma_range,
                           'rmse_range_over_tau': tau_range})
    return pd.concat(surfaces, ignore_index=True), pd.DataFrame.from_records(optima)


BASELINES = {'clipped-LS': clipped_ls, 'NNLS': nnls_columns}


def _trial_baselines(factory: ProblemFactory, seed: int) -> np.ndarray:
    problem = factory(seed)
    rows = []
    for estimate in BASELINES.values():
        m = metric_report(estimate(problem.phi, problem.y), problem.w)
        rows.append([m.rmse, m.rmse_squared_variant, m.sre_db])
    return np.array(rows)


def noise_robustness(noise_kind=NoiseKind.WHITE, snr_values: Sequence[float] = tuple(np.linspace(10, 40, 16)),
                     trials: int = 100, grid: Optional[SweepGrid] = None, base_seed: int = 0,
                     threads: int = 1, base_config: Optional[SolverConfig] = None,
                     factory: Optional[ProblemFactory] = None) -> Tuple[pd.DataFrame, pd.DataFrame]:
    """
    Mean metrics per SNR for both solvers (tuned over `grid` at each SNR) and the
    clipped least squares and NNLS baselines, plus the Spearman correlation of
    RMSE with SNR for every method.
    """
    grid = grid or SweepGrid()
    noise_kind = NoiseKind(noise_kind)
    base = base_config or default_config()
    template = factory or ProblemFactory(rank=3, sparsity_level=0.2)
    seeds = [derive_seed(base_seed, t) for t in range(trials)]
    records = []
    for snr in snr_values:
        noisy = dataclasses.replace(template, snr_db=float(snr), noise_kind=noise_kind)
        for kind in (SolverKind.IPSPLRU, SolverKind.ADSPLRU):
            best = sweep(noisy, grid, kind, trials, base, base_seed, threads).best
            records.append({'snr_db': float(snr), 'method': VARIANT_NAMES[(kind, Variant.SPARSE_LOW_RANK)],
                            'rmse': best['rmse'], 'rmse_squared_variant': best['rmse_squared_variant'],
                            'sre_db': best['sre_db'], 'tau': best['tau'], 'gamma': best['gamma']})
        baselines = np.stack(run_trials(_trial_baselines, [(noisy, s) for s in seeds], threads)).mean(axis=0)
        for name, row in zip(BASELINES, baselines):
            records.append({'snr_db': float(snr), 'method': name, 'rmse': row[0],
                            'rmse_squared_variant': row[1], 'sre_db': row[2], 'tau': np.nan, 'gamma': np.nan})
        logger.info(f"{noise_kind.value} noise, SNR {snr:.1f} dB done.")
    table = pd.DataFrame.from_records(records)
    trend = []
    for method, group in table.groupby('method', sort=False):
        rho = scipy.stats.spearmanr(group["snr_db"], group["rmse"])[0] if len(group) > 1 else np.nan
        trend.append({'method': method, 'spearman_rmse_vs_snr': float(rho)})
    return table, pd.DataFrame.from_records(trend)


def block_image_experiment(n: int = 100, bands: int = 224, seed: int = 0, gamma: float = 1e-3, tau: float = 1e-4,
                           kappa: int = 3, boundary=BoundaryMode.MIRROR, threads: int = 1,
                           base_config: Optional[SolverConfig] = None, block_size: int = 10) -> pd.DataFrame:
    """
    Per-row metrics of both solvers and of clipped least squares on the synthetic
    block image. The default weights are uniform: reweighting from the clipped
    least squares start pins every clipped entry at the 1/epsilon weight.
    """
    spec = WindowSpec(kappa=kappa, boundary=boundary)
    if spec.boundary == BoundaryMode.SHRINK:
        raise ConfigError("the block image experiment scores every pixel; use mirror or clamp boundaries")
    phi = sample_dictionary(n, bands, DictionarySource.SYNTHETIC_SMOOTH, seed)
    cube, truth = build_block_image(phi, seed=seed, block_size=block_size)
    cfg = dataclasses.replace(base_config or default_config(weight_mode=WeightMode.UNIFORM), gamma=gamma, tau=tau)
    frames = []
    for kind in (SolverKind.ADSPLRU, SolverKind.IPSPLRU):
        result = unmix_cube(cube, phi, spec, cfg, kind, threads)
        frames.append(block_row_metrics(result.abundances, truth, block_size).assign(solver=kind.value))
    pixels = cube.data.reshape(cube.bands, -1)
    baseline = AbundanceCube(clipped_ls(phi, pixels).reshape(truth.data.shape))
    frames.append(block_row_metrics(baseline, truth, block_size).assign(solver='clipped-LS'))
    return pd.concat(frames, ignore_index=True)
