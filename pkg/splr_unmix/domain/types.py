# splr_unmix/domain/types.py
import dataclasses
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Tuple

import numpy as np

from .enums import BoundaryMode, NoiseKind, Termination, Variant, WeightMode
from .errors import ConfigError, DimensionError, DomainError


def support_size(level: float, n: int) -> int:
    """Number of nonzero rows for a sparsity level; rounding guards against 0.07 * 100 = 7.000000000000001."""
    return math.ceil(round(level * n, 9))


def _coerce_enum(enum_cls, value, name: str):
    if isinstance(value, enum_cls):
        return value
    try:
        return enum_cls(value)
    except ValueError:
        choices = ', '.join(m.value for m in enum_cls)
        raise ConfigError(f"{name} must be one of {{{choices}}}, got {value!r}") from None


@dataclass
class WeightState:
    """The l1 weight matrix A (N x K) and the nuclear weight vector b (length min(N, K))."""
    a: np.ndarray
    b: np.ndarray
    mode: WeightMode = WeightMode.UNIFORM

    def __post_init__(self):
        if self.a.ndim != 2 or self.b.ndim != 1 or self.b.size != min(self.a.shape):
            raise DimensionError(f"weights need a 2-D A and b of length min{self.a.shape}, got b of shape {self.b.shape}")
        if np.any(self.a < 0) or np.any(self.b < 0):
            raise DomainError("weights must be nonnegative")

    @classmethod
    def uniform(cls, n: int, k: int) -> 'WeightState':
        return cls(a=np.ones((n, k)), b=np.ones(min(n, k)), mode=WeightMode.UNIFORM)


@dataclass(frozen=True)
class SolverConfig:
    """Parameters shared by both solver families."""
    gamma: float = 0.0                  # sparsity weight
    tau: float = 0.0                    # low-rank weight
    lam: float = 0.5                    # IPSpLRU least squares prox step
    lam_min: float = 5e-3               # smallest step reached by IPSpLRU continuation
    lam_decay: float = 0.5              # step factor applied once a stage settles
    mu: float = 0.01                    # ADMM penalty
    weight_mode: WeightMode = WeightMode.UNIFORM
    epsilon: float = 1e-16              # reweighting floor
    max_iters: int = 2000
    ip_tol: float = 1e-8                # relative squared change threshold (IPSpLRU)
    admm_rel_tol: float = 1e-4          # relative tolerance scaling zeta (ADSpLRU)
    literal_paper_thresholds: bool = False
    record_objective: bool = True
    record_iterates: bool = False

    def __post_init__(self):
        object.__setattr__(self, 'weight_mode', _coerce_enum(WeightMode, self.weight_mode, 'weight_mode'))
        for name in ('gamma', 'tau'):
            value = getattr(self, name)
            if not math.isfinite(value) or value < 0:
                raise ConfigError(f"{name} must be finite and >= 0, got {value}")
        for name in ('lam', 'mu', 'epsilon', 'ip_tol', 'admm_rel_tol'):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise ConfigError(f"{name} must be finite and > 0, got {value}")
        if not self.lam_min > 0 or not 0 < self.lam_decay <= 1:
            raise ConfigError(f"need lam_min > 0 and 0 < lam_decay <= 1, got {self.lam_min}, {self.lam_decay}")
        if int(self.max_iters) < 1:
            raise ConfigError(f"max_iters must be >= 1, got {self.max_iters}")

    @classmethod
    def from_dict(cls, params: Mapping[str, Any]) -> 'SolverConfig':
        """Builds a config from a plain mapping; `lambda` is accepted as an alias of `lam`."""
        params = dict(params)
        if 'lambda' in params:
            params['lam'] = params.pop('lambda')
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(params) - known)
        if unknown:
            raise ConfigError(f"Unknown solver parameter(s): {', '.join(unknown)}")
        return cls(**params)

    def variant(self, variant: Variant) -> 'SolverConfig':
        """The single-prior ablations zero one of the two regularization weights."""
        if variant == Variant.LOW_RANK_ONLY:
            return dataclasses.replace(self, gamma=0.0)
        if variant == Variant.SPARSE_ONLY:
            return dataclasses.replace(self, tau=0.0)
        return self

    def to_dict(self) -> Dict[str, Any]:
        out = dataclasses.asdict(self)
        out['weight_mode'] = self.weight_mode.value
        return out


@dataclass
class SolveReport:
    """Outcome of one solver run on one pixel block."""
    w_hat: np.ndarray
    iterations: int
    termination: Termination
    objective_trace: List[float] = field(default_factory=list)
    residual_trace: List[Tuple[float, float]] = field(default_factory=list)  # ADSpLRU (primal, dual)
    rel_change_trace: List[float] = field(default_factory=list)              # IPSpLRU
    iterate_trace: Optional[List[np.ndarray]] = None

    @property
    def converged(self) -> bool:
        return self.termination == Termination.TOLERANCE

    def summary(self) -> Dict[str, Any]:
        return {
            'iterations': self.iterations,
            'termination': self.termination.value,
            'objective': self.objective_trace[-1] if self.objective_trace else float('nan'),
        }


@dataclass
class AdmmState:
    """Primal, auxiliary and scaled dual variables of ADSpLRU."""
    w: np.ndarray
    omega1: np.ndarray
    omega2: np.ndarray
    omega3: np.ndarray
    omega4: np.ndarray
    lambda1: np.ndarray
    lambda2: np.ndarray
    lambda3: np.ndarray
    lambda4: np.ndarray
    r_cached: Optional[np.ndarray] = None  # (Phi^T Phi + 3 I)^-1

    @classmethod
    def zeros(cls, l: int, n: int, k: int) -> 'AdmmState':
        nk = lambda: np.zeros((n, k))
        return cls(w=nk(), omega1=np.zeros((l, k)), omega2=nk(), omega3=nk(), omega4=nk(),
                   lambda1=np.zeros((l, k)), lambda2=nk(), lambda3=nk(), lambda4=nk())

    def check_dims(self, l: int, n: int, k: int):
        for name in ('omega1', 'lambda1'):
            if getattr(self, name).shape != (l, k):
                raise DimensionError(f"{name} must be {l}x{k}, got {getattr(self, name).shape}")
        for name in ('w', 'omega2', 'omega3', 'omega4', 'lambda2', 'lambda3', 'lambda4'):
            if getattr(self, name).shape != (n, k):
                raise DimensionError(f"{name} must be {n}x{k}, got {getattr(self, name).shape}")


@dataclass(frozen=True)
class WindowSpec:
    """A kappa x kappa window, kappa odd, holding K = kappa^2 pixels."""
    kappa: int = 3
    boundary: BoundaryMode = BoundaryMode.MIRROR

    def __post_init__(self):
        object.__setattr__(self, 'boundary', _coerce_enum(BoundaryMode, self.boundary, 'boundary'))
        if int(self.kappa) != self.kappa or self.kappa < 1 or self.kappa % 2 == 0:
            raise ConfigError(f"kappa must be odd and >= 1, got {self.kappa}")

    @property
    def k(self) -> int:
        return self.kappa * self.kappa

    @property
    def half(self) -> int:
        return self.kappa // 2

    @property
    def center_column(self) -> int:
        return (self.k - 1) // 2


@dataclass
class HsiCube:
    """An L-band image stored band-major: data[band, row, col]."""
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 3 or self.data.size == 0:
            raise DimensionError(f"cube data must be a non-empty (bands, height, width) array, got {self.data.shape}")
        if not np.all(np.isfinite(self.data)):
            raise DomainError("cube contains non-finite spectra")

    @property
    def bands(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    def pixel(self, row: int, col: int) -> np.ndarray:
        return self.data[:, row, col]


@dataclass
class AbundanceCube:
    """Per-pixel abundance vectors stored endmember-major: data[endmember, row, col]."""
    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 3:
            raise DimensionError(f"abundance data must be (endmembers, height, width), got {self.data.shape}")
        if np.any(self.data < 0):
            raise DomainError("abundances must be nonnegative")

    @property
    def endmembers(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]

    def vectors(self) -> np.ndarray:
        """Abundance vectors as columns, pixels in row-major order (N x height*width)."""
        return self.data.reshape(self.endmembers, -1)


@dataclass(frozen=True)
class SpLrSpec:
    """Target structure of a simultaneously sparse and low-rank abundance matrix."""
    n: int
    k: int
    rank: int
    sparsity_level: float
    seed: int = 0

    def __post_init__(self):
        if self.rank < 1:
            raise ConfigError(f"rank must be >= 1, got {self.rank}")
        if not 0 < self.sparsity_level <= 1:
            raise ConfigError(f"sparsity_level must lie in (0, 1], got {self.sparsity_level}")
        if self.rank > self.k:
            raise ConfigError(f"rank {self.rank} exceeds the pixel count {self.k}")
        if support_size(self.sparsity_level, self.n) < self.rank:
            raise ConfigError(f"a support of {support_size(self.sparsity_level, self.n)} rows cannot host rank {self.rank}")

    @property
    def support(self) -> int:
        return support_size(self.sparsity_level, self.n)


@dataclass(frozen=True)
class NoiseSpec:
    snr_db: float
    kind: NoiseKind = NoiseKind.WHITE
    ar_coefficient: float = 0.9
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, 'kind', _coerce_enum(NoiseKind, self.kind, 'noise kind'))
        if math.isnan(self.snr_db) or self.snr_db == -math.inf:
            raise ConfigError(f"snr_db must be finite (or +inf for no noise), got {self.snr_db}")
        if not 0 <= self.ar_coefficient < 1:
            raise ConfigError(f"ar_coefficient must lie in [0, 1), got {self.ar_coefficient}")


@dataclass(frozen=True)
class MetricReport:
    rmse: float
    rmse_squared_variant: float
    sre_db: float
    n_pixels: int

    def to_dict(self) -> Dict[str, Any]:
        return dataclasses.asdict(self)


DEFAULT_GRID = (0.0,) + tuple(10.0 ** e for e in range(-10, 0))


@dataclass(frozen=True)
class SweepGrid:
    """Regularization values tried for tau and gamma."""
    tau_values: Tuple[float, ...] = DEFAULT_GRID
    gamma_values: Tuple[float, ...] = DEFAULT_GRID

    def __post_init__(self):
        for name in ('tau_values', 'gamma_values'):
            values = tuple(float(v) for v in getattr(self, name))
            object.__setattr__(self, name, values)
            if not values:
                raise ConfigError(f"{name} is empty")
            if any(v < 0 for v in values) or any(b <= a for a, b in zip(values, values[1:])):
                raise ConfigError(f"{name} must be nonnegative and strictly ascending")

    @classmethod
    def from_exponents(cls, exponents, include_zero: bool = True) -> 'SweepGrid':
        values = ((0.0,) if include_zero else ()) + tuple(10.0 ** e for e in sorted(exponents))
        return cls(tau_values=values, gamma_values=values)
