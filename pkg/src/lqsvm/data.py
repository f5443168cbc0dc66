"""Datasets, CSV ingestion, standardization, stratified folds and synthetic blobs."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np


class DataError(ValueError):
    """Raised for malformed input data."""


@dataclass(frozen=True)
class Dataset:
    """Feature matrix with integer labels in ``0..class_count-1``.

    ``label_values`` records the original label of each contiguous class id,
    so predictions can be written back in the file's own vocabulary.
    """

    features: np.ndarray
    labels: np.ndarray
    class_count: int
    label_values: tuple = field(default=())

    def __post_init__(self):
        X = np.array(self.features, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1) if X.size else X.reshape(0, 0)
        y = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if X.ndim != 2:
            raise DataError("features must be a 2-D matrix")
        if X.shape[0] < 1:
            raise DataError("dataset must contain at least one sample")
        if X.shape[0] != y.shape[0]:
            raise DataError(f"{X.shape[0]} feature rows but {y.shape[0]} labels")
        if self.class_count < 2:
            raise DataError("class_count must be >= 2")
        if y.min() < 0 or y.max() >= self.class_count:
            raise DataError("labels must lie in 0..class_count-1")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        if not self.label_values:
            object.__setattr__(self, "label_values", tuple(range(self.class_count)))
        elif len(self.label_values) != self.class_count:
            raise DataError("label_values must have one entry per class")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def d(self) -> int:
        return self.features.shape[1]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=np.int64)
        return Dataset(self.features[idx], self.labels[idx], self.class_count, self.label_values)

    def with_features(self, X) -> "Dataset":
        return Dataset(X, self.labels, self.class_count, self.label_values)

    def present_classes(self) -> np.ndarray:
        return np.unique(self.labels)


def load_csv(path, label_column: int = -1, skip_header: bool = False) -> Dataset:
    """Read a headerless comma-separated file; one column holds integer labels.

    Labels are remapped to contiguous ids preserving their sorted order.
    """
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for lineno, row in enumerate(reader, start=1):
            if skip_header and lineno == 1:
                continue
            if not row or all(not cell.strip() for cell in row):
                continue
            rows.append((lineno, row))
    if not rows:
        raise DataError(f"{path}: no data rows")

    width = len(rows[0][1])
    if width < 1:
        raise DataError(f"{path}: empty rows")
    col = label_column if label_column >= 0 else width + label_column
    if not 0 <= col < width:
        raise DataError(f"{path}: label column {label_column} out of range for {width} columns")

    feats, raw_labels = [], []
    for lineno, row in rows:
        if len(row) != width:
            raise DataError(f"{path}: row {lineno} has {len(row)} columns, expected {width}")
        try:
            lab = int(row[col].strip())
        except ValueError:
            raise DataError(f"{path}: row {lineno}: label {row[col]!r} is not an integer") from None
        try:
            vals = [float(cell) for j, cell in enumerate(row) if j != col]
        except ValueError as exc:
            raise DataError(f"{path}: row {lineno}: non-numeric feature ({exc})") from None
        feats.append(vals)
        raw_labels.append(lab)

    values = sorted(set(raw_labels))
    if len(values) < 2:
        raise DataError(f"{path}: only one class present ({values[0]}); at least two are required")
    remap = {v: i for i, v in enumerate(values)}
    X = np.array(feats, dtype=float).reshape(len(rows), width - 1)
    y = np.array([remap[v] for v in raw_labels], dtype=np.int64)
    return Dataset(X, y, len(values), tuple(values))


def write_csv(data: Dataset, path, original_labels: bool = True) -> None:
    """Write features followed by the label as the last column."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row, lab in zip(data.features, data.labels):
            out = data.label_values[lab] if original_labels else int(lab)
            w.writerow([repr(float(v)) for v in row] + [out])


def read_feature_csv(path, skip_header: bool = False) -> np.ndarray:
    """Read an unlabeled feature matrix (one sample per row)."""
    rows = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if skip_header and lineno == 1:
                continue
            if not row:
                continue
            try:
                rows.append([float(c) for c in row])
            except ValueError as exc:
                raise DataError(f"{path}: row {lineno}: non-numeric feature ({exc})") from None
    if not rows:
        raise DataError(f"{path}: no data rows")
    width = len(rows[0])
    for i, r in enumerate(rows):
        if len(r) != width:
            raise DataError(f"{path}: row {i + 1} has {len(r)} columns, expected {width}")
    return np.array(rows, dtype=float)


# -- standardization -----------------------------------------------------------


@dataclass(frozen=True)
class Standardizer:
    means: np.ndarray
    stds: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.means, dtype=float).reshape(-1)
        s = np.asarray(self.stds, dtype=float).reshape(-1)
        if m.shape != s.shape:
            raise DataError("means and stds must have equal length")
        if np.any(s <= 0):
            raise DataError("stds must be positive")
        object.__setattr__(self, "means", m)
        object.__setattr__(self, "stds", s)

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.means.shape[0]:
            raise DataError(f"expected {self.means.shape[0]} features, got {X.shape[-1]}")
        return (X - self.means) / self.stds

    def inverse_transform(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=float) * self.stds + self.means


def standardize_fit(train: Dataset) -> Standardizer:
    # population std; zero-variance columns keep scale 1 so they map to 0
    means = train.features.mean(axis=0)
    stds = train.features.std(axis=0)
    stds = np.where(stds > 0, stds, 1.0)
    return Standardizer(means, stds)


def standardize_apply(s: Standardizer, data: Dataset) -> Dataset:
    return data.with_features(s.transform(data.features))


# -- folds ---------------------------------------------------------------------


@dataclass(frozen=True)
class FoldAssignment:
    fold_of: np.ndarray
    k: int

    def __post_init__(self):
        f = np.asarray(self.fold_of, dtype=np.int64)
        f.setflags(write=False)
        object.__setattr__(self, "fold_of", f)

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of != fold)

    def __eq__(self, other):
        return (
            isinstance(other, FoldAssignment)
            and self.k == other.k
            and np.array_equal(self.fold_of, other.fold_of)
        )

    __hash__ = None


def stratified_order(labels: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Concatenation of per-class shuffled index lists, classes in ascending order."""
    parts = []
    for c in np.unique(labels):
        members = np.flatnonzero(labels == c)
        parts.append(members[rng.permutation(members.size)])
    return np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)


def stratified_kfold(data: Dataset, k: int, seed: int) -> FoldAssignment:
    """Shuffle each class, then deal all of them round-robin onto the folds.

    The dealing position carries over from one class to the next, which keeps
    total fold sizes within one of each other as well as per-class counts.
    """
    if k < 2:
        raise DataError("fold count must be >= 2")
    if k > data.n:
        raise DataError(f"fold count {k} exceeds sample count {data.n}")
    rng = np.random.default_rng(seed)
    order = stratified_order(data.labels, rng)
    fold_of = np.empty(data.n, dtype=np.int64)
    fold_of[order] = np.arange(data.n) % k
    return FoldAssignment(fold_of, k)


# -- synthetic data --------------------------------------------------------------


@dataclass(frozen=True)
class BlobSpec:
    center: Sequence[float]
    sigma: float
    count: int


def make_blobs(specs: Sequence[BlobSpec], seed: int) -> Dataset:
    """Isotropic Gaussian clusters, one per class, in class order."""
    if len(specs) < 2:
        raise DataError("need at least two classes")
    rng = np.random.default_rng(seed)
    dims = {len(s.center) for s in specs}
    if len(dims) != 1:
        raise DataError("all centers must have the same dimension")
    X, y = [], []
    for c, s in enumerate(specs):
        if s.count < 1:
            raise DataError("class counts must be >= 1")
        center = np.asarray(s.center, dtype=float)
        X.append(center + s.sigma * rng.standard_normal((s.count, center.size)))
        y.append(np.full(s.count, c))
    return Dataset(np.vstack(X), np.concatenate(y), len(specs))


def regular_simplex_centers(n_classes: int, distance: float, dim: int | None = None) -> np.ndarray:
    """Class centers with every pairwise distance equal to ``distance``."""
    dim = dim or max(2, n_classes - 1)
    if n_classes == 2:
        pts = np.zeros((2, dim))
        pts[1, 0] = distance
        return pts
    # scaled standard basis vectors are pairwise sqrt(2) apart
    if dim < n_classes:
        basis = np.eye(n_classes)
        centered = basis - basis.mean(axis=0)
        # orthonormal frame of the (n_classes-1)-dim affine hull
        u, _, _ = np.linalg.svd(centered.T, full_matrices=False)
        coords = centered @ u[:, : n_classes - 1]
        pts = np.zeros((n_classes, dim))
        pts[:, : n_classes - 1] = coords
    else:
        pts = np.eye(n_classes, dim)
    return pts * (distance / np.sqrt(2.0))


def separated_blobs(
    n_classes: int,
    n_total: int,
    distance_in_sigmas: float,
    seed: int,
    dim: int = 2,
    sigma: float = 1.0,
) -> Dataset:
    """Equal-sized classes whose centers are pairwise ``distance_in_sigmas`` apart."""
    centers = regular_simplex_centers(n_classes, distance_in_sigmas * sigma, dim)
    base, extra = divmod(n_total, n_classes)
    specs = [BlobSpec(centers[c], sigma, base + (1 if c < extra else 0)) for c in range(n_classes)]
    return make_blobs(specs, seed)
