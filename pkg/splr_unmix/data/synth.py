# splr_unmix/data/synth.py
"""Synthetic dictionaries, sparse and low-rank abundance matrices, noise and the block image."""
import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Tuple

import numpy as np
import scipy.linalg
import scipy.signal

from .loader import PathLike, read_library
from ..domain.enums import DictionarySource, NoiseKind
from ..domain.errors import ConfigError, GenerationError, IngestionError
from ..domain.types import AbundanceCube, HsiCube, NoiseSpec, SpLrSpec, support_size

logger = logging.getLogger(__name__)

MAX_ATTEMPTS = 100
RANK_RTOL = 1e-6
MAX_CONDITION = 1e4

# (sparsity %, rank) per block, rows top to bottom: joint sparse, dense low-rank, two sparse & low-rank rows
BLOCK_LAYOUT = (
    ((4, 1), (8, 2), (12, 3), (16, 4)),
    ((100, 1), (100, 2), (100, 3), (100, 4)),
    ((4, 2), (8, 2), (12, 2), (16, 2)),
    ((4, 3), (8, 3), (12, 3), (16, 3)),
)


def sample_dictionary(n: int, l: int = 224, source=DictionarySource.SYNTHETIC_SMOOTH, seed: int = 0,
                      library_path: Optional[PathLike] = None) -> np.ndarray:
    """
    L x N nonnegative endmember matrix, either n columns drawn at random from a
    spectral library CSV or band-smooth synthetic spectra (sums of Gaussian bumps).
    Synthetic draws with n <= l are redrawn until their condition number is at
    most MAX_CONDITION.
    """
    source = DictionarySource(source)
    rng = np.random.default_rng(seed)
    if source == DictionarySource.RANDOM_USGS_CSV:
        if library_path is None:
            raise IngestionError("random-usgs-csv needs a library file")
        library, _ = read_library(library_path)
        if library.shape[1] < n:
            raise IngestionError(f"library {library_path} holds {library.shape[1]} materials, {n} requested")
        picks = rng.choice(library.shape[1], size=n, replace=False)
        return library[:, picks].copy()

    if n < 1 or l < 1:
        raise ConfigError(f"dictionary size must be positive, got n={n}, l={l}")
    bands = np.arange(l, dtype=np.float64)
    for attempt in range(1, MAX_ATTEMPTS + 1):
        phi = np.column_stack([_smooth_spectrum(rng, bands) for _ in range(n)])
        # a wide dictionary cannot have full column rank, so only tall ones are capped
        if n > l:
            return phi
        condition = float(np.linalg.cond(phi))
        if condition <= MAX_CONDITION:
            return phi
        logger.debug(f"Dictionary draw {attempt} rejected: condition number {condition:.3g}")
    raise GenerationError(f"no {l}x{n} dictionary with condition number <= {MAX_CONDITION:g} in {MAX_ATTEMPTS} attempts")


def _smooth_spectrum(rng: np.random.Generator, bands: np.ndarray) -> np.ndarray:
    """Two or three broad continuum bumps plus 8 to 16 narrow absorption-scale features."""
    l = bands.size
    broad = rng.integers(2, 4)
    centers = rng.uniform(0, l, size=broad)
    widths = rng.uniform(l / 8.0, l / 3.0, size=broad)
    heights = rng.uniform(0.1, 0.5, size=broad)
    narrow = rng.integers(8, 17)
    centers = np.concatenate([centers, rng.uniform(0, l, size=narrow)])
    widths = np.concatenate([widths, rng.uniform(1.0, 6.0, size=narrow)])
    heights = np.concatenate([heights, rng.uniform(0.1, 1.0, size=narrow)])
    return 0.02 + np.sum(heights * np.exp(-0.5 * ((bands[:, None] - centers) / widths) ** 2), axis=1)


def sample_splr_abundance(spec: SpLrSpec) -> np.ndarray:
    """
    Row-sparse rank-r nonnegative matrix: r basis vectors with Uniform(0,1) entries
    on a shared random support, mixed column by column with Uniform(0,1) weights.
    """
    rng = np.random.default_rng(spec.seed)
    support = spec.support
    for attempt in range(1, MAX_ATTEMPTS + 1):
        rows = rng.choice(spec.n, size=support, replace=False)
        basis = np.zeros((spec.n, spec.rank))
        basis[rows] = rng.uniform(0.0, 1.0, size=(support, spec.rank))
        w = basis @ rng.uniform(0.0, 1.0, size=(spec.rank, spec.k))
        s = scipy.linalg.svdvals(w)
        rank = int(np.sum(s > RANK_RTOL * s[0])) if s[0] > 0 else 0
        nonzero_rows = int(np.count_nonzero(np.any(w > 0, axis=1)))
        if rank == spec.rank and abs(nonzero_rows - support) <= 1:
            return w
        logger.debug(f"Abundance draw {attempt} rejected: rank {rank}, {nonzero_rows} nonzero rows")
    raise GenerationError(f"no rank-{spec.rank} draw with {support} nonzero rows in {MAX_ATTEMPTS} attempts")


def mix(phi: np.ndarray, w: np.ndarray) -> np.ndarray:
    return phi @ w


def add_noise(clean: np.ndarray, spec: NoiseSpec) -> np.ndarray:
    """
    Adds Gaussian noise scaled so that 10 log10(||clean||_F^2 / ||E||_F^2) equals
    spec.snr_db. Colored noise is AR(1) along the band axis (axis 0).
    """
    clean = np.asarray(clean, dtype=np.float64)
    if math.isinf(spec.snr_db):
        return clean.copy()
    signal_energy = float(np.sum(clean ** 2))
    if signal_energy == 0.0:
        raise ConfigError("cannot set an SNR on an all-zero signal")
    rng = np.random.default_rng(spec.seed)
    z = rng.standard_normal(clean.shape)
    if spec.kind == NoiseKind.COLORED:
        rho = spec.ar_coefficient
        gain = math.sqrt(1.0 - rho ** 2)
        # e_0 = z_0, e_l = rho e_{l-1} + sqrt(1 - rho^2) z_l keeps unit stationary variance
        noise, _ = scipy.signal.lfilter([gain], [1.0, -rho], z, axis=0, zi=((1.0 - gain) * z[:1]))
    else:
        noise = z
    noise *= math.sqrt(signal_energy / (float(np.sum(noise ** 2)) * 10.0 ** (spec.snr_db / 10.0)))
    return clean + noise


def realized_snr_db(clean: np.ndarray, noisy: np.ndarray) -> float:
    noise_energy = float(np.sum((noisy - clean) ** 2))
    return math.inf if noise_energy == 0 else 10.0 * math.log10(float(np.sum(clean ** 2)) / noise_energy)


@dataclass
class SyntheticProblem:
    phi: np.ndarray
    w: np.ndarray
    y_clean: np.ndarray
    y: np.ndarray


def make_problem(phi: np.ndarray, k: int, rank: int, sparsity_level: float, snr_db: float,
                 seed: int, noise_kind=NoiseKind.WHITE, ar_coefficient: float = 0.9) -> SyntheticProblem:
    """One noisy window: W drawn with `seed`, the noise with `seed + 1`."""
    w = sample_splr_abundance(SpLrSpec(n=phi.shape[1], k=k, rank=rank, sparsity_level=sparsity_level, seed=seed))
    y_clean = mix(phi, w)
    y = add_noise(y_clean, NoiseSpec(snr_db=snr_db, kind=noise_kind, ar_coefficient=ar_coefficient, seed=seed + 1))
    return SyntheticProblem(phi=phi, w=w, y_clean=y_clean, y=y)


def hostable_level(level: float, n: int, rank: int) -> float:
    """Sparsity level raised, if needed, so that its row support can host `rank`."""
    if support_size(level, n) >= rank:
        return level
    logger.warning(f"{level:.0%} of {n} endmembers cannot host rank {rank}; using a support of {rank} rows.")
    return rank / n


def block_specs(n: int, block_size: int, seed: int) -> List[List[SpLrSpec]]:
    """Per-block generator specs; supports too small to host the block rank are enlarged to the rank."""
    k = block_size * block_size
    specs = []
    for i, row in enumerate(BLOCK_LAYOUT):
        spec_row = []
        for j, (percent, rank) in enumerate(row):
            level = hostable_level(percent / 100.0, n, rank)
            spec_row.append(SpLrSpec(n=n, k=k, rank=rank, sparsity_level=level, seed=seed + 4 * i + j))
        specs.append(spec_row)
    return specs


def build_block_image(phi: np.ndarray, seed: int = 0, snr_db: float = 30.0,
                      block_size: int = 10) -> Tuple[HsiCube, AbundanceCube]:
    """
    A 4x4 grid of block_size x block_size blocks, each with its own (sparsity, rank)
    structure, mixed through `phi` and corrupted by white noise at `snr_db`.
    """
    n = phi.shape[1]
    side = 4 * block_size
    truth = np.zeros((n, side, side))
    for i, spec_row in enumerate(block_specs(n, block_size, seed)):
        for j, spec in enumerate(spec_row):
            w = sample_splr_abundance(spec)
            truth[:, i * block_size:(i + 1) * block_size, j * block_size:(j + 1) * block_size] = \
                w.reshape(n, block_size, block_size)
    clean = mix(phi, truth.reshape(n, -1))
    noisy = add_noise(clean, NoiseSpec(snr_db=snr_db, kind=NoiseKind.WHITE, seed=seed + 16))
    logger.info(f"Built {side}x{side} block image with {n} endmembers and {phi.shape[0]} bands at {snr_db} dB")
    return HsiCube(noisy.reshape(phi.shape[0], side, side)), AbundanceCube(truth)
