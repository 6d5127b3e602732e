# splr_unmix/domain/errors.py
from typing import Optional


class SplrError(Exception):
    """Base class for every error raised by splr_unmix."""


class DimensionError(SplrError, ValueError):
    """Operand shapes are inconsistent."""


class DomainError(SplrError, ValueError):
    """A value lies outside the domain of an operation (negative threshold, NaN entry, ...)."""


class ConfigError(SplrError, ValueError):
    """A solver, window, sweep or generator configuration is invalid."""


class NumericalError(SplrError, ArithmeticError):
    """A linear algebra routine failed."""
    def __init__(self, message: str, iteration: Optional[int] = None):
        super().__init__(message if iteration is None else f"{message} (iteration {iteration})")
        self.iteration = iteration


class DivergenceError(NumericalError):
    """A solver iterate became non-finite."""


class IngestionError(SplrError, OSError):
    """An input file is missing, truncated or malformed."""


class GenerationError(SplrError, RuntimeError):
    """Synthetic data generation could not satisfy its targets."""


class ContractError(SplrError, RuntimeError):
    """A caller-side precondition was violated."""


class RangeError(SplrError, IndexError):
    """A pixel coordinate lies outside the image (or outside the unmixable interior)."""
