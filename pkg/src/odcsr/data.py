"""Dataset types, file ingestion, column normalization, synthetic data.

The canonical in-memory layout is columns-as-points: a D x N matrix holds N
points of dimension D, so X @ C combines data columns. Most CSV exports put
one point per row, hence the ``rows_are_points`` flag on the readers.

File formats:
  * CSV: comma-separated decimal floats, optional single header row.
  * Binary ("odcm"): magic ``ODCM``, u32 version=1, u64 rows, u64 cols,
    then row-major little-endian float64 payload. Round-trips bit-exactly.
  * Labels: one token per line, ``0`` = inlier, ``1`` = outlier.
"""

from __future__ import annotations

import csv
import struct
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DimensionError, ParseError

_ODCM_MAGIC = b"ODCM"
_ODCM_VERSION = 1


@dataclass(frozen=True)
class DataMatrix:
    """A D x N dataset, one point per column. Immutable after construction."""

    values: np.ndarray
    point_ids: tuple[str, ...] | None = None

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64, copy=True)
        if values.ndim != 2:
            raise DimensionError(f"expected a 2-D matrix, got ndim={values.ndim}")
        if not np.all(np.isfinite(values)):
            raise ParseError("data matrix contains non-finite entries")
        if values.shape[1] < 2:
            raise DimensionError(
                f"need at least 2 points, got N={values.shape[1]} "
                "(self-representation is vacuous for a single point)"
            )
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        if self.point_ids is not None:
            ids = tuple(str(p) for p in self.point_ids)
            if len(ids) != values.shape[1]:
                raise DimensionError(
                    f"{len(ids)} point ids for {values.shape[1]} columns"
                )
            object.__setattr__(self, "point_ids", ids)

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    @property
    def num_points(self) -> int:
        return self.values.shape[1]

    def ids(self) -> tuple[str, ...]:
        """Point identifiers, defaulting to stringified column indices."""
        if self.point_ids is not None:
            return self.point_ids
        return tuple(str(i) for i in range(self.num_points))


@dataclass(frozen=True)
class SyntheticSpec:
    """Parameters for union-of-subspaces data with ambient-sphere outliers."""

    ambient_dim: int
    num_subspaces: int
    subspace_dim: int
    inliers_per_subspace: int
    num_outliers: int
    noise_sigma: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        if self.ambient_dim <= 0 or self.subspace_dim <= 0:
            raise ConfigError("dimensions must be positive")
        if self.subspace_dim >= self.ambient_dim:
            raise ConfigError(
                f"subspace_dim ({self.subspace_dim}) must be < ambient_dim "
                f"({self.ambient_dim})"
            )
        if self.num_subspaces < 1:
            raise ConfigError("need at least one subspace")
        if self.inliers_per_subspace <= 0 or self.num_outliers <= 0:
            raise ConfigError("point counts must be positive")
        if self.noise_sigma < 0:
            raise ConfigError("noise_sigma must be >= 0")


def _parse_csv_rows(path, header: bool) -> np.ndarray:
    rows: list[list[float]] = []
    width = None
    with open(path, "r", newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if header and lineno == 1:
                continue
            if not row or (len(row) == 1 and row[0].strip() == ""):
                continue  # tolerate blank lines, incl. trailing newline
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise ParseError(
                    f"{path}: row {lineno} has {len(row)} cells, expected {width}"
                )
            try:
                rows.append([float(cell) for cell in row])
            except ValueError as exc:
                raise ParseError(f"{path}: row {lineno}: {exc}") from None
    if not rows:
        raise ParseError(f"{path}: no data rows")
    return np.asarray(rows, dtype=np.float64)


def _read_odcm(path) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.read(24)
        if len(head) < 24:
            raise ParseError(f"{path}: truncated header")
        magic, version, rows, cols = struct.unpack("<4sIQQ", head)
        if magic != _ODCM_MAGIC:
            raise ParseError(f"{path}: bad magic {magic!r}")
        if version != _ODCM_VERSION:
            raise ParseError(f"{path}: unsupported version {version}")
        payload = fh.read(8 * rows * cols)
    if len(payload) != 8 * rows * cols:
        raise ParseError(f"{path}: truncated payload")
    data = np.frombuffer(payload, dtype="<f8").reshape(rows, cols)
    return data.astype(np.float64, copy=True)


def load_matrix(
    path,
    fmt: str = "csv",
    rows_are_points: bool = False,
    header: bool = False,
) -> DataMatrix:
    """Read a matrix file into a DataMatrix.

    With ``rows_are_points`` the file stores one point per row and is
    transposed into the columns-as-points layout.
    """
    if fmt == "csv":
        raw = _parse_csv_rows(path, header=header)
    elif fmt == "odcm":
        raw = _read_odcm(path)
    else:
        raise ConfigError(f"unknown matrix format {fmt!r}")
    if rows_are_points:
        raw = raw.T
    return DataMatrix(raw)


def save_matrix(matrix: np.ndarray | DataMatrix, path, fmt: str = "csv",
                rows_are_points: bool = False) -> None:
    """Write a matrix to ``path``; ``%.17g`` CSV cells round-trip float64 exactly."""
    values = matrix.values if isinstance(matrix, DataMatrix) else np.asarray(matrix, dtype=np.float64)
    if rows_are_points:
        values = values.T
    if fmt == "csv":
        with open(path, "w") as fh:
            for row in values:
                fh.write(",".join(format(v, ".17g") for v in row))
                fh.write("\n")
    elif fmt == "odcm":
        with open(path, "wb") as fh:
            fh.write(struct.pack("<4sIQQ", _ODCM_MAGIC, _ODCM_VERSION, *values.shape))
            fh.write(np.ascontiguousarray(values, dtype="<f8").tobytes())
    else:
        raise ConfigError(f"unknown matrix format {fmt!r}")


def load_labels(path) -> np.ndarray:
    """Read a 0/1 label file (1 = outlier) into an int array."""
    labels = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            tok = line.strip()
            if not tok:
                continue
            if tok not in ("0", "1"):
                raise ParseError(f"{path}: line {lineno}: expected 0 or 1, got {tok!r}")
            labels.append(int(tok))
    if not labels:
        raise ParseError(f"{path}: no labels")
    return np.asarray(labels, dtype=np.int64)


def save_labels(labels: np.ndarray, path) -> None:
    with open(path, "w") as fh:
        for v in np.asarray(labels).ravel():
            fh.write(f"{int(v)}\n")


def normalize_columns(X: DataMatrix) -> DataMatrix:
    """Scale every nonzero column to unit Euclidean norm.

    Zero columns are left untouched and reported via a warning; real feature
    extractors occasionally emit them and rejecting the whole matrix would be
    worse.
    """
    values = X.values.copy()
    norms = np.linalg.norm(values, axis=0)
    zero = norms == 0.0
    if np.any(zero):
        idx = np.flatnonzero(zero)
        warnings.warn(
            f"{idx.size} zero column(s) left unnormalized: {idx.tolist()}",
            stacklevel=2,
        )
    values[:, ~zero] /= norms[~zero]
    return DataMatrix(values, X.point_ids)


def generate_synthetic(spec: SyntheticSpec) -> tuple[DataMatrix, np.ndarray]:
    """Draw unit-norm points from random linear subspaces plus sphere outliers.

    Inliers: for each subspace, a random orthonormal basis U (QR of a Gaussian
    matrix); each point is U @ v for Gaussian v, normalized, with optional
    Gaussian noise added and the sum renormalized. Outliers are uniform on the
    ambient unit sphere. Deterministic given ``rng_seed``.

    Returns the data matrix and a 0/1 label array (1 = outlier).
    """
    rng = np.random.default_rng(spec.rng_seed)
    D, d = spec.ambient_dim, spec.subspace_dim
    n_in = spec.num_subspaces * spec.inliers_per_subspace
    n = n_in + spec.num_outliers

    cols = np.empty((D, n))
    ids = []
    pos = 0
    for k in range(spec.num_subspaces):
        basis, _ = np.linalg.qr(rng.standard_normal((D, d)))
        coeffs = rng.standard_normal((d, spec.inliers_per_subspace))
        pts = basis @ coeffs
        pts /= np.linalg.norm(pts, axis=0)
        if spec.noise_sigma > 0:
            pts = pts + spec.noise_sigma * rng.standard_normal(pts.shape)
            pts /= np.linalg.norm(pts, axis=0)
        cols[:, pos : pos + spec.inliers_per_subspace] = pts
        ids.extend(f"in{k}_{i}" for i in range(spec.inliers_per_subspace))
        pos += spec.inliers_per_subspace

    out = rng.standard_normal((D, spec.num_outliers))
    out /= np.linalg.norm(out, axis=0)
    cols[:, pos:] = out
    ids.extend(f"out_{i}" for i in range(spec.num_outliers))

    labels = np.zeros(n, dtype=np.int64)
    labels[n_in:] = 1
    return DataMatrix(cols, tuple(ids)), labels
