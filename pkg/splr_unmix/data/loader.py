# splr_unmix/data/loader.py
"""
File formats:

* cube (.hsc): 16-byte header (8-byte magic ``SPLRHSC\\0`` + little-endian uint32
  version + 4 reserved bytes), three little-endian uint32 (L, height, width), then
  L*height*width little-endian float64 in band-major, row-major order.
* dictionary CSV: one row per band, one column per material, header row of names.
* abundance CSV (.abc): columns ``row,col,e0..e{N-1}``, one line per pixel.
"""
import contextlib
import hashlib
import logging
import os
import tempfile
from pathlib import Path
from typing import IO, Iterator, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from ..domain.errors import DimensionError, IngestionError
from ..domain.types import AbundanceCube, HsiCube

logger = logging.getLogger(__name__)

PathLike = Union[str, os.PathLike]

CUBE_MAGIC = b'SPLRHSC\x00'
CUBE_VERSION = 1
_HEADER = np.dtype([('magic', 'S8'), ('version', '<u4'), ('reserved', '<u4'),
                    ('bands', '<u4'), ('height', '<u4'), ('width', '<u4')])


@contextlib.contextmanager
def atomic_write(path: PathLike, mode: str = 'wb') -> Iterator[IO]:
    """Writes to a temporary file in the target directory and renames it into place on success."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix='.tmp', dir=path.parent)
    try:
        with os.fdopen(fd, mode) as fh:
            yield fh
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        with contextlib.suppress(FileNotFoundError):
            os.unlink(tmp)
        raise


def file_sha256(path: PathLike) -> str:
    digest = hashlib.sha256()
    with open(path, 'rb') as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b''):
            digest.update(chunk)
    return digest.hexdigest()


def write_cube(path: PathLike, cube: HsiCube):
    header = np.zeros(1, dtype=_HEADER)
    header[0] = (CUBE_MAGIC, CUBE_VERSION, 0, cube.bands, cube.height, cube.width)
    with atomic_write(path) as fh:
        fh.write(header.tobytes())
        fh.write(np.ascontiguousarray(cube.data, dtype='<f8').tobytes())
    logger.info(f"Wrote {cube.bands}x{cube.height}x{cube.width} cube to {path}")


def read_cube(path: PathLike) -> HsiCube:
    try:
        raw = Path(path).read_bytes()
    except OSError as e:
        logger.error(f"Error reading cube {path}: {e}")
        raise IngestionError(f"cannot read cube file {path}: {e}") from e
    if len(raw) < _HEADER.itemsize:
        raise IngestionError(f"cube file {path} is shorter than its header")
    header = np.frombuffer(raw[:_HEADER.itemsize], dtype=_HEADER)[0]
    if bytes(header['magic']).ljust(8, b'\x00') != CUBE_MAGIC:
        raise IngestionError(f"{path} is not a cube file (bad magic)")
    if int(header['version']) != CUBE_VERSION:
        raise IngestionError(f"{path}: unsupported cube version {int(header['version'])}")
    shape = (int(header['bands']), int(header['height']), int(header['width']))
    expected = _HEADER.itemsize + 8 * shape[0] * shape[1] * shape[2]
    if len(raw) != expected:
        raise IngestionError(f"{path}: expected {expected} bytes for a {shape} cube, found {len(raw)}")
    data = np.frombuffer(raw[_HEADER.itemsize:], dtype='<f8').reshape(shape).astype(np.float64)
    return HsiCube(data)


def read_library(path: PathLike) -> Tuple[np.ndarray, List[str]]:
    """Reads a spectral library CSV (bands x materials) into a matrix and its material names."""
    try:
        frame = pd.read_csv(path, float_precision='round_trip')
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        logger.error(f"Error reading spectral library {path}: {e}")
        raise IngestionError(f"cannot read spectral library {path}: {e}") from e
    try:
        values = frame.to_numpy(dtype=np.float64)
    except ValueError as e:
        raise IngestionError(f"{path}: library contains non-numeric values") from e
    if values.size == 0:
        raise IngestionError(f"{path}: library is empty")
    if not np.all(np.isfinite(values)) or np.any(values < 0):
        raise IngestionError(f"{path}: reflectances must be finite and nonnegative")
    logger.info(f"Loaded spectral library {path}: {values.shape[0]} bands x {values.shape[1]} materials")
    return values, [str(c) for c in frame.columns]


def write_library(path: PathLike, phi: np.ndarray, names: Optional[List[str]] = None):
    names = names or [f"m{j}" for j in range(phi.shape[1])]
    frame = pd.DataFrame(phi, columns=names)
    with atomic_write(path, 'w') as fh:
        frame.to_csv(fh, index=False, float_format='%.17g')


def abundance_frame(cube: AbundanceCube, offset: int = 0) -> pd.DataFrame:
    """One line per pixel; `offset` shifts coordinates of a cube that skips the image border."""
    rows, cols = np.meshgrid(np.arange(cube.height) + offset, np.arange(cube.width) + offset, indexing='ij')
    frame = pd.DataFrame(cube.vectors().T, columns=[f"e{i}" for i in range(cube.endmembers)])
    frame.insert(0, 'col', cols.ravel())
    frame.insert(0, 'row', rows.ravel())
    return frame


def write_abundances(path: PathLike, cube: AbundanceCube, offset: int = 0):
    with atomic_write(path, 'w') as fh:
        abundance_frame(cube, offset).to_csv(fh, index=False, float_format='%.17g')
    logger.info(f"Wrote {cube.endmembers}-endmember abundances for {cube.height}x{cube.width} pixels to {path}")


def read_abundances(path: PathLike) -> AbundanceCube:
    try:
        frame = pd.read_csv(path, float_precision='round_trip')
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
        logger.error(f"Error reading abundances {path}: {e}")
        raise IngestionError(f"cannot read abundance file {path}: {e}") from e
    if not {'row', 'col'} <= set(frame.columns):
        raise IngestionError(f"{path}: abundance file needs 'row' and 'col' columns")
    value_cols = [c for c in frame.columns if c not in ('row', 'col')]
    if not value_cols:
        raise IngestionError(f"{path}: abundance file has no endmember columns")
    if frame.empty:
        raise IngestionError(f"{path}: abundance file has no pixels")
    rows = frame['row'].to_numpy(int) - int(frame['row'].min())
    cols = frame['col'].to_numpy(int) - int(frame['col'].min())
    height, width = int(rows.max()) + 1, int(cols.max()) + 1
    if len(frame) != height * width:
        raise IngestionError(f"{path}: expected {height * width} pixel rows, found {len(frame)}")
    data = np.zeros((len(value_cols), height, width))
    data[:, rows, cols] = frame[value_cols].to_numpy(np.float64).T
    return AbundanceCube(data)


def check_compatible(cube: HsiCube, phi: np.ndarray):
    if cube.bands != phi.shape[0]:
        raise DimensionError(f"cube has {cube.bands} bands but the dictionary has {phi.shape[0]} rows")


def write_frame(path: PathLike, frame: pd.DataFrame):
    with atomic_write(path, 'w') as fh:
        frame.to_csv(fh, index=False, float_format='%.10g')
    logger.info(f"Wrote {len(frame)} rows to {path}")
