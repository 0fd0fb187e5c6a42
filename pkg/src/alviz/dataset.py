"""Regression dataset ingestion, splitting, and synthetic fixtures.

All feature/label storage lives here: CSV loading with hard validation
(NaN/Inf cells are errors, never imputed), deterministic seeded pool/test
splits, per-feature standardization, and the synthetic generators used by
the test suites.
"""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

log = logging.getLogger(__name__)

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1

STD_FLOOR = 1e-12

SYNTHETIC_KINDS = ("clusters", "piecewise_constant", "plane")


class DatasetError(Exception):
    """Raised when an input file cannot be turned into a valid dataset."""


def fnv1a_64(data: bytes) -> int:
    """64-bit FNV-1a over raw bytes; stable across platforms and runs."""
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _MASK64
    return h


@dataclass(frozen=True)
class Dataset:
    """Immutable feature matrix + labels with provenance metadata.

    features is (n, d) float64, labels is (n,) float64.  content_hash is a
    64-bit FNV-1a digest of the originating bytes so downstream artifacts
    can detect dataset mismatch.
    """

    features: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...]
    source_id: str
    content_hash: int

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class SplitSpec:
    """Deterministic pool/test split: same (dataset, spec) -> same split."""

    test_fraction: float
    seed: int


@dataclass(frozen=True)
class Scaler:
    """Per-feature standardizer fit on pool features only.

    Standard deviations are floored at STD_FLOOR so constant features do
    not divide by zero; transform followed by inverse recovers inputs to
    ~1e-9 relative.
    """

    mean: np.ndarray
    std: np.ndarray

    @classmethod
    def fit(cls, features: np.ndarray) -> "Scaler":
        features = np.asarray(features, dtype=np.float64)
        mean = features.mean(axis=0)
        std = features.std(axis=0)
        floored = np.maximum(std, STD_FLOOR)
        if np.any(std < STD_FLOOR):
            log.warning("constant feature(s) at std floor %g", STD_FLOOR)
        return cls(mean=mean, std=floored)

    def transform(self, features: np.ndarray) -> np.ndarray:
        return (np.asarray(features, dtype=np.float64) - self.mean) / self.std

    def inverse(self, features: np.ndarray) -> np.ndarray:
        return np.asarray(features, dtype=np.float64) * self.std + self.mean


def _finalize(features, labels, feature_names, source_id, content_hash) -> Dataset:
    features = np.ascontiguousarray(features, dtype=np.float64)
    labels = np.ascontiguousarray(labels, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] < 1 or features.shape[1] < 1:
        raise DatasetError(f"need an (n>=1, d>=1) feature matrix, got shape {features.shape}")
    if labels.shape != (features.shape[0],):
        raise DatasetError(
            f"labels length {labels.shape} does not match {features.shape[0]} rows"
        )
    if not np.all(np.isfinite(features)) or not np.all(np.isfinite(labels)):
        raise DatasetError("non-finite values in dataset")
    if len(feature_names) != features.shape[1]:
        raise DatasetError("feature_names length does not match feature count")
    features.setflags(write=False)
    labels.setflags(write=False)
    return Dataset(
        features=features,
        labels=labels,
        feature_names=tuple(feature_names),
        source_id=source_id,
        content_hash=content_hash,
    )


def in_memory_hash(features: np.ndarray, labels: np.ndarray) -> int:
    """Content hash for datasets that never existed as a file."""
    buf = np.ascontiguousarray(features, dtype=np.float64).tobytes()
    buf += np.ascontiguousarray(labels, dtype=np.float64).tobytes()
    return fnv1a_64(buf)


def from_arrays(features, labels, feature_names=None, source_id="memory") -> Dataset:
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if feature_names is None:
        feature_names = tuple(f"x{j}" for j in range(features.shape[1]))
    return _finalize(
        features, labels, feature_names, source_id, in_memory_hash(features, labels)
    )


def load_csv(path, target_column: str, delimiter: str = ",") -> Dataset:
    """Load a headered numeric CSV; the target column becomes labels.

    Every non-target column must parse as a finite float.  Bad cells are
    reported with their 1-based row number and column name.
    """
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such data file: {path}")
    if len(delimiter) != 1:
        raise DatasetError("delimiter must be a single character")
    raw = path.read_bytes()
    reader = csv.reader(io.StringIO(raw.decode("utf-8")), delimiter=delimiter)
    try:
        header = next(reader)
    except StopIteration:
        raise DatasetError(f"{path}: empty file") from None
    header = [h.strip() for h in header]
    if target_column not in header:
        raise DatasetError(f"{path}: target column {target_column!r} not in header {header}")
    target_idx = header.index(target_column)
    feature_names = [h for i, h in enumerate(header) if i != target_idx]

    features: list[list[float]] = []
    labels: list[float] = []
    for rownum, row in enumerate(reader, start=2):
        if not row or (len(row) == 1 and row[0].strip() == ""):
            continue
        if len(row) != len(header):
            raise DatasetError(f"{path}: row {rownum} has {len(row)} cells, expected {len(header)}")
        parsed = []
        for col, cell in zip(header, row):
            try:
                value = float(cell)
            except ValueError:
                raise DatasetError(
                    f"{path}: row {rownum}, column {col!r}: not numeric: {cell!r}"
                ) from None
            if not math.isfinite(value):
                raise DatasetError(f"{path}: row {rownum}, column {col!r}: non-finite value {cell!r}")
            parsed.append(value)
        labels.append(parsed[target_idx])
        features.append([v for i, v in enumerate(parsed) if i != target_idx])
    if not features:
        raise DatasetError(f"{path}: no data rows")

    return _finalize(
        np.array(features, dtype=np.float64),
        np.array(labels, dtype=np.float64),
        feature_names,
        source_id=path.name,
        content_hash=fnv1a_64(raw),
    )


def write_csv(dataset: Dataset, path, target_column: str = "y", delimiter: str = ",") -> None:
    """Export as headered CSV (target first) with 17-significant-digit floats."""
    path = Path(path)
    lines = [delimiter.join([target_column, *dataset.feature_names])]
    for i in range(dataset.n):
        cells = [format(dataset.labels[i], ".17g")]
        cells.extend(format(v, ".17g") for v in dataset.features[i])
        lines.append(delimiter.join(cells))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def split_indices(n: int, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray]:
    """Seeded shuffle split of range(n) into (pool_idx, test_idx).

    The shuffle is a random-key sort: draw one uniform per row and order
    rows by (key, index); the first round(n * test_fraction) rows of that
    order form the test side.  Byte-reproducible for a fixed seed.
    """
    if not 0.0 < spec.test_fraction < 1.0:
        raise ValueError(f"test_fraction must be in (0, 1), got {spec.test_fraction}")
    n_test = int(round(n * spec.test_fraction))
    if n_test < 1 or n - n_test < 1:
        raise ValueError(
            f"degenerate split: fraction {spec.test_fraction} of {n} rows leaves an empty side"
        )
    rng = np.random.default_rng(spec.seed)
    keys = rng.random(n)
    order = np.lexsort((np.arange(n), keys))
    return order[n_test:], order[:n_test]


def _subset(dataset: Dataset, idx: np.ndarray, tag: str) -> Dataset:
    features = dataset.features[idx]
    labels = dataset.labels[idx]
    return _finalize(
        features,
        labels,
        dataset.feature_names,
        source_id=f"{dataset.source_id}#{tag}",
        content_hash=in_memory_hash(features, labels),
    )


def split(dataset: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    """Split into disjoint, jointly exhaustive (pool, test) datasets."""
    pool_idx, test_idx = split_indices(dataset.n, spec)
    return _subset(dataset, pool_idx, "pool"), _subset(dataset, test_idx, "test")


def make_synthetic(kind: str, n: int, d: int, noise_sd: float, seed: int) -> Dataset:
    """Deterministic synthetic regression data for tests and desk-scale runs.

    kinds:
      clusters           - 4 Gaussian blobs (2 when d == 1) at lattice corners
                           spaced 10 apart, unit within-cluster sd; label of
                           cluster c is 5*c plus noise.
      piecewise_constant - features uniform on [0, 1]^d; the first min(d, 2)
                           dimensions thresholded at 0.5 define up to 4 boxes
                           with constants 2*(box_id+1); labels are the box
                           constant plus noise.
      plane              - points on a random 2-D affine subspace of R^d with
                           axis scales (3, 1.5), plus isotropic noise.
    """
    if kind not in SYNTHETIC_KINDS:
        raise ValueError(f"unknown synthetic kind {kind!r}; choose from {SYNTHETIC_KINDS}")
    if n < d or d < 1:
        raise ValueError(f"need n >= d >= 1, got n={n}, d={d}")
    if noise_sd < 0:
        raise ValueError("noise_sd must be >= 0")
    rng = np.random.default_rng(seed)

    if kind == "clusters":
        k = 2 if d == 1 else 4
        centers = np.zeros((k, d))
        for c in range(k):
            centers[c, 0] = 10.0 * (c & 1)
            if d > 1:
                centers[c, 1] = 10.0 * ((c >> 1) & 1)
        assign = np.arange(n) % k
        features = centers[assign] + rng.standard_normal((n, d))
        labels = 5.0 * assign + noise_sd * rng.standard_normal(n)
    elif kind == "piecewise_constant":
        features = rng.uniform(0.0, 1.0, size=(n, d))
        labels = piecewise_constant_truth(features) + noise_sd * rng.standard_normal(n)
    else:  # plane
        basis, _ = np.linalg.qr(rng.standard_normal((d, 2)))
        z = rng.standard_normal((n, 2)) * np.array([3.0, 1.5])
        features = z @ basis.T + noise_sd * rng.standard_normal((n, d))
        labels = z[:, 0] + 0.5 * z[:, 1] + noise_sd * rng.standard_normal(n)

    return from_arrays(features, labels, source_id=f"synthetic:{kind}:{n}x{d}:{seed}")


def piecewise_constant_truth(features: np.ndarray) -> np.ndarray:
    """Noise-free labels of the piecewise_constant generator for any features."""
    features = np.asarray(features, dtype=np.float64)
    box_id = (features[:, 0] > 0.5).astype(np.int64)
    if features.shape[1] > 1:
        box_id = box_id + 2 * (features[:, 1] > 0.5).astype(np.int64)
    return 2.0 * (box_id + 1.0)
