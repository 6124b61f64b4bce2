"""
Binary containers for matrices and Gaussian sample sets.

Matrix:  b"GRL1", little-endian u32 n, n*n float64 row-major.
Samples: b"GRL1", u32 p, u32 n, p*n float64 row-major.
"""

import time
from pathlib import Path
from typing import List, Union

import numpy as np

from ..exceptions import InvalidInputError
from .base import BaseExporter, ExportResult, RunArtifacts

MAGIC = b"GRL1"
_U32 = np.dtype("<u4")
_F64 = np.dtype("<f8")


def write_matrix(path: Union[str, Path], matrix: np.ndarray) -> Path:
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise InvalidInputError(f"Expected a square matrix, got shape {matrix.shape}")
    path = Path(path)
    with open(path, 'wb') as f:
        f.write(MAGIC)
        f.write(np.array([matrix.shape[0]], dtype=_U32).tobytes())
        f.write(np.ascontiguousarray(matrix, dtype=_F64).tobytes())
    return path


def _read_payload(path: Union[str, Path], header_words: int):
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise InvalidInputError(f"{path} is not a GRL1 container")
    dims = np.frombuffer(raw, dtype=_U32, count=header_words, offset=4)
    values = np.frombuffer(raw, dtype=_F64, offset=4 + 4 * header_words)
    return [int(d) for d in dims], values


def read_matrix(path: Union[str, Path]) -> np.ndarray:
    (n,), values = _read_payload(path, 1)
    if values.size != n * n:
        raise InvalidInputError(f"{path}: expected {n * n} values, found {values.size}")
    return values.reshape(n, n).copy()


def write_samples(path: Union[str, Path], samples: np.ndarray) -> Path:
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2:
        raise InvalidInputError(f"Expected a (p, n) sample array, got shape {samples.shape}")
    path = Path(path)
    with open(path, 'wb') as f:
        f.write(MAGIC)
        f.write(np.array(samples.shape, dtype=_U32).tobytes())
        f.write(np.ascontiguousarray(samples, dtype=_F64).tobytes())
    return path


def read_samples(path: Union[str, Path]) -> np.ndarray:
    (p, n), values = _read_payload(path, 2)
    if values.size != p * n:
        raise InvalidInputError(f"{path}: expected {p * n} values, found {values.size}")
    return values.reshape(p, n).copy()


class MatrixExporter(BaseExporter):
    """Export named matrices of a run, one container file each.

    Entries whose name starts with "samples" use the sample-set layout.
    """

    @property
    def supported_formats(self) -> List[str]:
        return ['matrix']

    @property
    def file_extension(self) -> str:
        return '.bin'

    def has_content(self, artifacts: RunArtifacts) -> bool:
        return bool(artifacts.matrices)

    def export(self, artifacts: RunArtifacts) -> ExportResult:
        start_time = time.time()

        errors = self.validate_config()
        if errors:
            return self.create_export_result(False, Path(self.config.output_path), 0, errors=errors)

        base = Path(self.config.output_path)
        base.parent.mkdir(parents=True, exist_ok=True)
        stem = base.name[:-len(self.file_extension)] if base.name.endswith(self.file_extension) else base.name
        written = []
        try:
            for name, matrix in artifacts.matrices.items():
                target = base.with_name(f"{stem}_{name}{self.file_extension}")
                if name.startswith("samples"):
                    write_samples(target, matrix)
                else:
                    write_matrix(target, matrix)
                written.append(target)
        except (OSError, InvalidInputError) as e:
            self.logger.error(f"Matrix export failed: {e}")
            return self.create_export_result(False, base, time.time() - start_time, errors=[str(e)])

        result = self.create_export_result(True, written[0] if written else base,
                                           time.time() - start_time, records_written=len(written),
                                           stats={'files': [str(p) for p in written]})
        result.file_size_bytes = sum(self.get_file_size(p) for p in written)
        return result
