# splr_unmix/cli.py
"""
Command-line front end.

    splr_unmix unmix --cube img.hsc --dict lib.csv --solver adsplru --kappa 3 --gamma 1e-3 --tau 1e-4 --out run/
    splr_unmix synth block-image --seed 7 --out synth/
    splr_unmix experiment toy-ablation --trials 100 --out exp/
    splr_unmix metrics --est a.abc --truth b.abc

Exit codes: 0 success, 1 other failure, 2 input/output or format error, 3 dimension mismatch,
4 invalid configuration.
"""
import argparse
import json
import logging
import os
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from .analysis import experiments
from .analysis.metrics import metric_report
from .data.loader import (atomic_write, check_compatible, read_abundances, read_cube, read_library,
                          write_abundances, write_cube, write_frame, write_library)
from .data.manifest import RunManifest
from .data.synth import build_block_image, make_problem, sample_dictionary
from .domain.enums import BoundaryMode, DictionarySource, NoiseKind, SolverKind, WeightMode
from .domain.errors import ConfigError, DimensionError, DomainError, IngestionError, SplrError
from .domain.types import AbundanceCube, HsiCube, SolverConfig, SweepGrid, WindowSpec
from .unmix import UnmixController, resolve_threads

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INGESTION = 2
EXIT_DIMENSION = 3
EXIT_CONFIG = 4

PRESETS = ('reweighting-study', 'toy-ablation', 'param-sweep', 'noise-robustness-white',
           'noise-robustness-colored', 'block-image')


def _common_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument('--out', default='.', help="output directory")
    parser.add_argument('--seed', type=int, default=0)
    parser.add_argument('--threads', type=int, default=None,
                        help="worker count (default: $SPLR_THREADS, else every core)")
    parser.add_argument('--log-level', default=os.environ.get('SPLR_LOG_LEVEL', 'INFO'))
    return parser


def _solver_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(add_help=False)
    parser.add_argument('--solver', choices=[k.value for k in SolverKind], default=SolverKind.ADSPLRU.value)
    parser.add_argument('--kappa', type=int, default=3, help="odd window side")
    parser.add_argument('--gamma', type=float, default=1e-3, help="sparsity weight")
    parser.add_argument('--tau', type=float, default=1e-4, help="low-rank weight")
    parser.add_argument('--lambda', dest='lam', type=float, default=0.5, help="IPSpLRU step parameter")
    parser.add_argument('--mu', type=float, default=0.01, help="ADSpLRU penalty parameter")
    parser.add_argument('--weights', choices=[m.value for m in WeightMode], default=WeightMode.REWEIGHTED.value)
    parser.add_argument('--literal-thresholds', action='store_true',
                        help="shrink with gamma, tau unscaled by the solver step or penalty")
    parser.add_argument('--max-iters', type=int, default=2000)
    parser.add_argument('--tol', type=float, default=None,
                        help="stopping tolerance (IPSpLRU relative change or ADSpLRU relative residual)")
    parser.add_argument('--boundary', choices=[b.value for b in BoundaryMode], default=BoundaryMode.MIRROR.value)
    return parser


def build_parser() -> argparse.ArgumentParser:
    common, solver = _common_parser(), _solver_parser()
    parser = argparse.ArgumentParser(prog='splr_unmix',
                                     description="Simultaneously sparse and low-rank abundance estimation.")
    sub = parser.add_subparsers(dest='command', required=True)

    p = sub.add_parser('unmix', parents=[common, solver], help="unmix a cube window by window")
    p.add_argument('--cube', help="cube file (.hsc)")
    p.add_argument('--dict', dest='dictionary', help="spectral library CSV (bands x materials)")

    synth = sub.add_parser('synth', help="generate synthetic data").add_subparsers(dest='asset', required=True)
    p = synth.add_parser('block-image', parents=[common], help="40x40 image of 16 structured blocks")
    p.add_argument('--dict', dest='dictionary', help="library CSV (default: synthetic spectra)")
    p.add_argument('--endmembers', type=int, default=100)
    p.add_argument('--bands', type=int, default=224)
    p.add_argument('--snr', type=float, default=30.0)
    p = synth.add_parser('problem', parents=[common], help="one noisy window problem")
    p.add_argument('--dict', dest='dictionary', help="library CSV (default: synthetic spectra)")
    p.add_argument('--endmembers', type=int, default=50)
    p.add_argument('--bands', type=int, default=224)
    p.add_argument('--pixels', type=int, default=9)
    p.add_argument('--rank', type=int, default=2)
    p.add_argument('--sparsity', type=float, default=0.2, help="fraction of active endmembers")
    p.add_argument('--snr', type=float, default=35.0)
    p.add_argument('--noise', choices=[k.value for k in NoiseKind], default=NoiseKind.WHITE.value)
    p = synth.add_parser('dictionary', parents=[common], help="endmember dictionary CSV")
    p.add_argument('--endmembers', type=int, default=50)
    p.add_argument('--bands', type=int, default=224)
    p.add_argument('--source', choices=[s.value for s in DictionarySource],
                   default=DictionarySource.SYNTHETIC_SMOOTH.value)
    p.add_argument('--library', help="library CSV to sample from (random-usgs-csv)")

    p = sub.add_parser('experiment', parents=[common], help="run an experiment preset")
    p.add_argument('preset', choices=PRESETS)
    p.add_argument('--trials', type=int, default=100)
    p.add_argument('--grid', help="comma-separated tau/gamma values (default: 0 and 1e-10..1e-1)")
    p.add_argument('--gamma', type=float, default=None)
    p.add_argument('--tau', type=float, default=None)
    p.add_argument('--snr-points', type=int, default=16, help="SNR values between 10 and 40 dB")
    p.add_argument('--endmembers', type=int, default=100, help="block-image dictionary size")
    p.add_argument('--weights', choices=[m.value for m in WeightMode], default=None,
                   help="weight mode of the tuned solvers (default: uniform for block-image, else reweighted)")
    p.add_argument('--literal-thresholds', action='store_true',
                   help="shrink with gamma, tau unscaled by the solver step or penalty")

    p = sub.add_parser('metrics', parents=[common], help="compare two abundance files")
    p.add_argument('--est', required=True)
    p.add_argument('--truth', required=True)
    return parser


def _require(args: argparse.Namespace, attr: str, flag: str) -> str:
    value = getattr(args, attr)
    if value is None:
        raise IngestionError(f"{flag} is required")
    if not Path(value).is_file():
        raise IngestionError(f"{flag}: file not found: {value}")
    return value


def solver_config_from_args(args: argparse.Namespace) -> SolverConfig:
    params: Dict[str, Any] = {
        'gamma': args.gamma, 'tau': args.tau, 'lam': args.lam, 'mu': args.mu,
        'weight_mode': args.weights, 'literal_paper_thresholds': args.literal_thresholds,
        'max_iters': args.max_iters, 'record_objective': True,
    }
    if args.tol is not None:
        params['ip_tol' if args.solver == SolverKind.IPSPLRU.value else 'admm_rel_tol'] = args.tol
    return SolverConfig.from_dict(params)


def _load_dictionary(args: argparse.Namespace, manifest: RunManifest, seed_key: str = 'dictionary') -> np.ndarray:
    if getattr(args, 'dictionary', None):
        phi, _ = read_library(_require(args, 'dictionary', '--dict'))
        manifest.add_input('dictionary', args.dictionary)
        return phi
    manifest.seeds[seed_key] = args.seed
    return sample_dictionary(args.endmembers, args.bands, DictionarySource.SYNTHETIC_SMOOTH, args.seed)


def cmd_unmix(args: argparse.Namespace, manifest: RunManifest, out: Path):
    cube_path = _require(args, 'cube', '--cube')
    dict_path = _require(args, 'dictionary', '--dict')
    cfg = solver_config_from_args(args)
    spec = WindowSpec(kappa=args.kappa, boundary=args.boundary)
    cube = read_cube(cube_path)
    phi, names = read_library(dict_path)
    check_compatible(cube, phi)
    manifest.add_input('cube', cube_path)
    manifest.add_input('dictionary', dict_path)
    config = {'solver': args.solver, 'kappa': spec.kappa, 'boundary': spec.boundary.value,
              'solver_params': cfg.to_dict(), 'threads': resolve_threads(args.threads)}
    manifest.config.update(config)
    result = UnmixController(config).run(cube, phi)
    write_abundances(out / 'abundances.abc', result.abundances, result.row_offset)
    write_frame(out / 'diagnostics.csv', result.diagnostics)


def cmd_synth(args: argparse.Namespace, manifest: RunManifest, out: Path):
    if args.asset == 'dictionary':
        source = DictionarySource(args.source)
        if args.library:
            manifest.add_input('library', args.library)
        phi = sample_dictionary(args.endmembers, args.bands, source, args.seed, args.library)
        manifest.seeds['dictionary'] = args.seed
        write_library(out / 'dictionary.csv', phi)
        return
    phi = _load_dictionary(args, manifest)
    write_library(out / 'dictionary.csv', phi)
    if args.asset == 'block-image':
        cube, truth = build_block_image(phi, seed=args.seed, snr_db=args.snr)
        manifest.seeds['block_image'] = args.seed
        write_cube(out / 'cube.hsc', cube)
        write_abundances(out / 'truth.abc', truth)
        return
    problem = make_problem(phi, args.pixels, args.rank, args.sparsity, args.snr, seed=args.seed,
                           noise_kind=args.noise)
    manifest.seeds['problem'] = args.seed
    # the window is stored as a 1 x K image so `unmix` can read it back
    write_cube(out / 'cube.hsc', HsiCube(problem.y.reshape(phi.shape[0], 1, args.pixels)))
    write_abundances(out / 'truth.abc', AbundanceCube(problem.w.reshape(phi.shape[1], 1, args.pixels)))


def _grid(args: argparse.Namespace) -> SweepGrid:
    if not args.grid:
        return SweepGrid()
    try:
        values = tuple(float(v) for v in args.grid.split(','))
    except ValueError:
        raise ConfigError(f"--grid: expected comma-separated numbers, got {args.grid!r}") from None
    return SweepGrid(tau_values=values, gamma_values=values)


def _experiment_config(args: argparse.Namespace) -> SolverConfig:
    weights = args.weights or (WeightMode.UNIFORM.value if args.preset == 'block-image' else WeightMode.REWEIGHTED.value)
    return experiments.default_config(weight_mode=weights, literal_paper_thresholds=args.literal_thresholds)


def cmd_experiment(args: argparse.Namespace, manifest: RunManifest, out: Path):
    threads = resolve_threads(args.threads)
    preset = args.preset
    base = _experiment_config(args)
    manifest.seeds['base'] = args.seed
    manifest.config.update({'preset': preset, 'trials': args.trials, 'threads': threads,
                            'solver_params': base.to_dict()})
    common = {'base_seed': args.seed, 'threads': threads, 'base_config': base}
    tables: Dict[str, pd.DataFrame] = {}
    if preset == 'toy-ablation':
        tables['toy_ablation'], tables['toy_ablation_residuals'] = experiments.toy_ablation(
            trials=args.trials, grid=_grid(args), **common)
    elif preset == 'reweighting-study':
        tables['reweighting_study'] = experiments.reweighting_study(
            trials=args.trials, gamma=args.gamma if args.gamma is not None else 3e-3,
            tau=args.tau if args.tau is not None else 3e-3, **common)
    elif preset == 'param-sweep':
        tables['param_sweep'], tables['param_sweep_optima'] = experiments.param_sweep(
            trials=args.trials, grid=_grid(args), **common)
    elif preset.startswith('noise-robustness'):
        kind = NoiseKind(preset.rsplit('-', 1)[1])
        snr_values = tuple(np.linspace(10.0, 40.0, args.snr_points))
        name = f"noise_robustness_{kind.value}"
        tables[name], tables[f"{name}_trend"] = experiments.noise_robustness(
            kind, snr_values, trials=args.trials, grid=_grid(args), **common)
    else:
        tables['block_image'] = experiments.block_image_experiment(
            n=args.endmembers, seed=args.seed, threads=threads, base_config=base,
            gamma=args.gamma if args.gamma is not None else 1e-3,
            tau=args.tau if args.tau is not None else 1e-4)
    for name, frame in tables.items():
        write_frame(out / f"{name}.csv", frame)


def cmd_metrics(args: argparse.Namespace, manifest: RunManifest, out: Path):
    est = read_abundances(_require(args, 'est', '--est'))
    truth = read_abundances(_require(args, 'truth', '--truth'))
    manifest.add_input('est', args.est)
    manifest.add_input('truth', args.truth)
    report = metric_report(est, truth).to_dict()
    text = json.dumps(report, indent=2, sort_keys=True)
    with atomic_write(out / 'metrics.json', 'w') as fh:
        fh.write(text + '\n')
    print(text)


COMMANDS = {
    'unmix': cmd_unmix,
    'synth': cmd_synth,
    'experiment': cmd_experiment,
    'metrics': cmd_metrics,
}


def exit_code(error: SplrError) -> int:
    if isinstance(error, IngestionError):
        return EXIT_INGESTION
    if isinstance(error, DimensionError):
        return EXIT_DIMENSION
    if isinstance(error, (ConfigError, DomainError)):
        return EXIT_CONFIG
    return EXIT_FAILURE


def main(argv: Optional[List[str]] = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(),
                        format='%(asctime)s %(levelname)s %(name)s: %(message)s')
    command = args.command if args.command != 'synth' else f"synth {args.asset}"
    out = Path(args.out)
    manifest = RunManifest(command=command, argv=argv,
                           config={k: v for k, v in vars(args).items() if k not in ('out', 'log_level')})
    try:
        COMMANDS[args.command](args, manifest, out)
        manifest.write(out / 'manifest.json')
    except SplrError as e:
        logger.error(f"{command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return exit_code(e)
    except OSError as e:
        logger.error(f"{command} failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INGESTION
    return EXIT_OK
