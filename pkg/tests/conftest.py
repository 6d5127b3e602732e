# tests/conftest.py
import numpy as np
import pytest

from splr_unmix.data.synth import sample_dictionary, sample_splr_abundance
from splr_unmix.domain.types import SpLrSpec


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def well_posed(rng):
    """Full column rank 20x6 dictionary and a strictly positive 6x3 abundance matrix."""
    phi = rng.uniform(0.0, 1.0, size=(20, 6))
    w = rng.uniform(0.1, 1.0, size=(6, 3))
    return phi, w, phi @ w


@pytest.fixture
def noisy_instance(rng):
    phi = rng.uniform(0.0, 1.0, size=(20, 6))
    w = rng.uniform(0.0, 1.0, size=(6, 3))
    y = phi @ w + 0.1 * rng.standard_normal((20, 3))
    return phi, y


@pytest.fixture
def small_dictionary():
    return sample_dictionary(12, 30, seed=3)


@pytest.fixture
def splr_window(small_dictionary):
    w = sample_splr_abundance(SpLrSpec(n=12, k=9, rank=2, sparsity_level=0.5, seed=4))
    return small_dictionary, w, small_dictionary @ w
