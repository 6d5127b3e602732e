# splr_unmix/data/manifest.py
import dataclasses
import json
import logging
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, Dict, List

import numpy as np
import scipy

from .loader import PathLike, atomic_write, file_sha256
from .. import __version__

logger = logging.getLogger(__name__)

VOLATILE_FIELDS = ('started_utc', 'finished_utc')


def utc_now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec='seconds')


@dataclass
class RunManifest:
    """Everything needed to replay a CLI run."""
    command: str
    argv: List[str]
    config: Dict[str, Any]
    seeds: Dict[str, int] = field(default_factory=dict)
    input_hashes: Dict[str, str] = field(default_factory=dict)
    started_utc: str = field(default_factory=utc_now)
    finished_utc: str = ''
    version: str = __version__
    numpy_version: str = np.__version__
    scipy_version: str = scipy.__version__

    def add_input(self, label: str, path: PathLike):
        self.input_hashes[label] = file_sha256(path)

    def reproducible_view(self) -> Dict[str, Any]:
        """The manifest minus wall-clock fields; equal views mean equal runs."""
        return {k: v for k, v in dataclasses.asdict(self).items() if k not in VOLATILE_FIELDS}

    def write(self, path: PathLike):
        self.finished_utc = utc_now()
        with atomic_write(path, 'w') as fh:
            json.dump(dataclasses.asdict(self), fh, indent=2, sort_keys=True, default=str)
        logger.info(f"Run manifest saved to {path}")

    @classmethod
    def read(cls, path: PathLike) -> 'RunManifest':
        with open(path) as fh:
            return cls(**json.load(fh))
