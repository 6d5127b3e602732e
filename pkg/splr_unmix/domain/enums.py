# splr_unmix/domain/enums.py
import enum


class WeightMode(enum.Enum):
    """How the l1 weights A and the nuclear weights b are chosen."""
    UNIFORM = 'uniform'
    FIXED_LS = 'fixed-ls'      # computed once from the least squares estimate
    REWEIGHTED = 'reweighted'  # refreshed from the current iterate every iteration


class Termination(enum.Enum):
    """Why a solver run stopped."""
    TOLERANCE = 'tolerance'
    MAX_ITERS = 'max_iters'


class SolverKind(enum.Enum):
    """The two solver families."""
    IPSPLRU = 'ipsplru'  # incremental proximal
    ADSPLRU = 'adsplru'  # ADMM


class Variant(enum.Enum):
    """
    Which priors are active. The single-prior variants are obtained by
    zeroing one of the two regularization weights.
    """
    SPARSE_LOW_RANK = 'splr'
    LOW_RANK_ONLY = 'lr'   # gamma = 0
    SPARSE_ONLY = 'sp'     # tau = 0


class BoundaryMode(enum.Enum):
    """How windows centred near the image border are completed."""
    MIRROR = 'mirror'
    CLAMP = 'clamp'
    SHRINK = 'shrink'  # only interior centres are unmixed


class NoiseKind(enum.Enum):
    WHITE = 'white'
    COLORED = 'colored'  # AR(1) along the band axis


class DictionarySource(enum.Enum):
    RANDOM_USGS_CSV = 'random-usgs-csv'
    SYNTHETIC_SMOOTH = 'synthetic-smooth'


VARIANT_NAMES = {
    (SolverKind.IPSPLRU, Variant.SPARSE_LOW_RANK): 'IPSpLRU',
    (SolverKind.IPSPLRU, Variant.LOW_RANK_ONLY): 'IPLRU',
    (SolverKind.IPSPLRU, Variant.SPARSE_ONLY): 'IPSpU',
    (SolverKind.ADSPLRU, Variant.SPARSE_LOW_RANK): 'ADSpLRU',
    (SolverKind.ADSPLRU, Variant.LOW_RANK_ONLY): 'ADLRU',
    (SolverKind.ADSPLRU, Variant.SPARSE_ONLY): 'ADSpU',
}
