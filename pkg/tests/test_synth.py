# tests/test_synth.py
import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from splr_unmix.data import synth
from splr_unmix.data.loader import write_library
from splr_unmix.data.synth import (add_noise, block_specs, build_block_image, hostable_level, make_problem,
                                   realized_snr_db, sample_dictionary, sample_splr_abundance)
from splr_unmix.domain.enums import DictionarySource, NoiseKind
from splr_unmix.domain.errors import ConfigError, GenerationError, IngestionError
from splr_unmix.domain.types import NoiseSpec, SpLrSpec, support_size


def test_library_column_pick_is_seeded(tmp_path):
    path = tmp_path / 'library.csv'
    write_library(path, np.arange(30.0).reshape(10, 3))
    first = sample_dictionary(2, source=DictionarySource.RANDOM_USGS_CSV, seed=5, library_path=path)
    again = sample_dictionary(2, source='random-usgs-csv', seed=5, library_path=path)
    assert first.shape == (10, 2)
    assert_array_equal(first, again)
    assert len(set(first[0])) == 2


def test_library_source_needs_enough_materials(tmp_path):
    path = tmp_path / 'library.csv'
    write_library(path, np.ones((4, 3)))
    with pytest.raises(IngestionError):
        sample_dictionary(5, source=DictionarySource.RANDOM_USGS_CSV, library_path=path)
    with pytest.raises(IngestionError):
        sample_dictionary(2, source=DictionarySource.RANDOM_USGS_CSV)


def test_synthetic_dictionary_is_nonnegative_and_seeded():
    phi = sample_dictionary(8, 224, seed=1)
    assert phi.shape == (224, 8)
    assert np.all(phi >= 0)
    assert_array_equal(phi, sample_dictionary(8, 224, seed=1))
    assert not np.array_equal(phi, sample_dictionary(8, 224, seed=2))


def test_synthetic_dictionary_is_well_conditioned():
    phi = sample_dictionary(50, 224, seed=0)
    assert np.linalg.cond(phi) < 1e3
    assert np.linalg.cond(sample_dictionary(100, 224, seed=0)) <= synth.MAX_CONDITION


def test_dictionary_condition_cap_gives_up(monkeypatch):
    monkeypatch.setattr(synth, 'MAX_CONDITION', 1.0)
    monkeypatch.setattr(synth, 'MAX_ATTEMPTS', 3)
    with pytest.raises(GenerationError):
        sample_dictionary(6, 40, seed=0)
    # wide dictionaries skip the cap
    assert sample_dictionary(40, 6, seed=0).shape == (6, 40)


def test_rank_one_dense_abundance_has_proportional_columns():
    w = sample_splr_abundance(SpLrSpec(n=10, k=6, rank=1, sparsity_level=1.0, seed=3))
    ratios = w / w[:, :1]
    assert np.all(w > 0)
    assert_allclose(ratios, ratios[:1].repeat(10, axis=0))


@pytest.mark.parametrize('rank, level', [(1, 0.1), (2, 0.2), (3, 0.1), (5, 0.2)])
def test_abundance_rank_and_row_support(rank, level):
    spec = SpLrSpec(n=50, k=9, rank=rank, sparsity_level=level, seed=rank)
    w = sample_splr_abundance(spec)
    s = np.linalg.svd(w, compute_uv=False)
    assert int(np.sum(s > 1e-6 * s[0])) == rank
    assert int(np.count_nonzero(np.any(w != 0, axis=1))) == spec.support
    assert np.all(w >= 0)


def test_support_rounding():
    assert support_size(0.07, 100) == 7
    assert support_size(0.04, 50) == 2


def test_spec_validation():
    with pytest.raises(ConfigError):
        SpLrSpec(n=50, k=9, rank=9, sparsity_level=0.1)
    with pytest.raises(ConfigError):
        SpLrSpec(n=50, k=9, rank=2, sparsity_level=0.0)
    with pytest.raises(ConfigError):
        NoiseSpec(snr_db=float('nan'))
    with pytest.raises(ConfigError):
        NoiseSpec(snr_db=30.0, ar_coefficient=1.0)


def test_hostable_level_enlarges_small_supports():
    assert hostable_level(0.2, 50, 5) == 0.2
    assert support_size(hostable_level(0.1, 50, 9), 50) == 9


def test_infinite_snr_returns_clean(rng):
    clean = rng.uniform(size=(20, 4))
    assert_array_equal(add_noise(clean, NoiseSpec(snr_db=math.inf)), clean)


@pytest.mark.parametrize('kind', list(NoiseKind))
def test_noise_is_scaled_to_the_exact_snr(rng, kind):
    clean = rng.uniform(size=(224, 9))
    noisy = add_noise(clean, NoiseSpec(snr_db=30.0, kind=kind, seed=4))
    assert realized_snr_db(clean, noisy) == pytest.approx(30.0, abs=1e-9)


def test_colored_noise_autocorrelation(rng):
    clean = rng.uniform(size=(224, 9))
    e = add_noise(clean, NoiseSpec(snr_db=20.0, kind=NoiseKind.COLORED, ar_coefficient=0.9, seed=11)) - clean
    lag1 = np.sum(e[1:] * e[:-1]) / np.sum(e[:-1] ** 2)
    assert lag1 == pytest.approx(0.9, abs=0.05)


def test_zero_signal_cannot_carry_an_snr():
    with pytest.raises(ConfigError):
        add_noise(np.zeros((5, 2)), NoiseSpec(snr_db=20.0))


def test_make_problem_is_deterministic(small_dictionary):
    a = make_problem(small_dictionary, 9, 2, 0.5, 35.0, seed=8)
    b = make_problem(small_dictionary, 9, 2, 0.5, 35.0, seed=8)
    assert_array_equal(a.y, b.y)
    assert_allclose(a.y_clean, small_dictionary @ a.w)
    assert realized_snr_db(a.y_clean, a.y) == pytest.approx(35.0, abs=1e-9)


def test_block_layout_structure():
    specs = block_specs(100, 10, seed=0)
    assert (specs[1][0].sparsity_level, specs[1][0].rank) == (1.0, 1)
    assert (specs[0][0].support, specs[0][0].rank) == (4, 1)
    assert specs[3][3].support == 16 and specs[3][3].rank == 3


def test_block_image_blocks_follow_their_specs():
    phi = sample_dictionary(100, 12, seed=0)
    cube, truth = build_block_image(phi, seed=0)
    assert cube.data.shape == (12, 40, 40)
    assert truth.data.shape == (100, 40, 40)
    assert np.all(truth.data >= 0)

    dense = truth.data[:, 10:20, 0:10].reshape(100, -1)
    assert np.all(np.any(dense > 0, axis=1))
    s = np.linalg.svd(dense, compute_uv=False)
    assert int(np.sum(s > 1e-6 * s[0])) == 1

    sparse = truth.data[:, 0:10, 0:10].reshape(100, -1)
    assert int(np.count_nonzero(np.any(sparse > 0, axis=1))) == 4


def test_block_image_is_deterministic():
    phi = sample_dictionary(20, 8, seed=1)
    first, _ = build_block_image(phi, seed=7)
    second, _ = build_block_image(phi, seed=7)
    assert_array_equal(first.data, second.data)
