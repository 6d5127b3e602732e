# tests/test_loader.py
import numpy as np
import pytest
from numpy.testing import assert_array_equal

from splr_unmix.data.loader import (CUBE_MAGIC, atomic_write, check_compatible, file_sha256, read_abundances,
                                    read_cube, read_library, write_abundances, write_cube, write_library)
from splr_unmix.data.manifest import RunManifest
from splr_unmix.domain.errors import DimensionError, IngestionError
from splr_unmix.domain.types import AbundanceCube, HsiCube


def test_cube_file_round_trip(tmp_path, rng):
    cube = HsiCube(rng.uniform(size=(5, 3, 4)))
    path = tmp_path / 'img.hsc'
    write_cube(path, cube)
    raw = path.read_bytes()
    assert raw[:8] == CUBE_MAGIC
    assert len(raw) == 28 + 8 * 60
    assert_array_equal(read_cube(path).data, cube.data)


def test_cube_reader_rejects_bad_files(tmp_path, rng):
    path = tmp_path / 'img.hsc'
    write_cube(path, HsiCube(rng.uniform(size=(2, 2, 2))))
    raw = path.read_bytes()
    (tmp_path / 'short.hsc').write_bytes(raw[:-8])
    with pytest.raises(IngestionError):
        read_cube(tmp_path / 'short.hsc')
    (tmp_path / 'magic.hsc').write_bytes(b'NOTACUBE' + raw[8:])
    with pytest.raises(IngestionError, match="bad magic"):
        read_cube(tmp_path / 'magic.hsc')
    with pytest.raises(IngestionError):
        read_cube(tmp_path / 'missing.hsc')


def test_library_validation(tmp_path):
    path = tmp_path / 'lib.csv'
    write_library(path, np.array([[0.1, 0.2], [0.3, 0.4], [0.5, 0.6]]), ['sand', 'grass'])
    phi, names = read_library(path)
    assert phi.shape == (3, 2)
    assert names == ['sand', 'grass']
    (tmp_path / 'neg.csv').write_text("a,b\n0.1,-0.2\n")
    with pytest.raises(IngestionError):
        read_library(tmp_path / 'neg.csv')
    (tmp_path / 'text.csv').write_text("a,b\n0.1,oops\n")
    with pytest.raises(IngestionError):
        read_library(tmp_path / 'text.csv')


def test_library_values_survive_a_round_trip(tmp_path, rng):
    phi = rng.uniform(size=(40, 7))
    write_library(tmp_path / 'lib.csv', phi)
    assert_array_equal(read_library(tmp_path / 'lib.csv')[0], phi)


def test_abundance_file_keeps_pixel_coordinates(tmp_path, rng):
    cube = AbundanceCube(rng.uniform(size=(3, 2, 4)))
    path = tmp_path / 'est.abc'
    write_abundances(path, cube, offset=1)
    header = path.read_text().splitlines()[0]
    assert header == 'row,col,e0,e1,e2'
    assert path.read_text().splitlines()[1].startswith('1,1,')
    assert_array_equal(read_abundances(path).data, cube.data)


def test_dimension_check(rng):
    with pytest.raises(DimensionError):
        check_compatible(HsiCube(rng.uniform(size=(4, 2, 2))), np.ones((5, 3)))


def test_atomic_write_leaves_nothing_on_failure(tmp_path):
    target = tmp_path / 'out.txt'
    with pytest.raises(RuntimeError):
        with atomic_write(target, 'w') as fh:
            fh.write('partial')
            raise RuntimeError('interrupted')
    assert list(tmp_path.iterdir()) == []


def test_manifest_round_trip(tmp_path):
    data = tmp_path / 'input.bin'
    data.write_bytes(b'abc')
    manifest = RunManifest(command='unmix', argv=['unmix', '--kappa', '3'], config={'kappa': 3},
                           seeds={'base': 7})
    manifest.add_input('cube', data)
    assert manifest.input_hashes['cube'] == file_sha256(data)
    manifest.write(tmp_path / 'manifest.json')
    loaded = RunManifest.read(tmp_path / 'manifest.json')
    assert loaded.reproducible_view() == manifest.reproducible_view()
    assert loaded.finished_utc
    assert 'started_utc' not in loaded.reproducible_view()
