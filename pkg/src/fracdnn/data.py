"""Datasets: synthetic CLS points, CSV ingestion, batch normalization and
mini-batch sampling.

Features are stored column-per-sample (``Y`` is n_f x n) and labels as a
one-hot matrix ``C`` (n_c x n).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from fracdnn.errors import FracDNNError, ShapeError

BN_EPS = 1e-8


class DataFormatError(FracDNNError, ValueError):
    pass


def one_hot(labels, n_classes: int) -> np.ndarray:
    labels = np.asarray(labels, dtype=int)
    C = np.zeros((n_classes, labels.size))
    C[labels, np.arange(labels.size)] = 1.0
    return C


@dataclass
class Dataset:
    Y: np.ndarray
    C: np.ndarray
    class_names: Optional[list] = None
    feature_names: Optional[list] = field(default=None, compare=False)

    def __post_init__(self):
        self.Y = np.asarray(self.Y, dtype=float)
        self.C = np.asarray(self.C, dtype=float)
        if self.Y.ndim != 2 or self.C.ndim != 2:
            raise ShapeError("features and labels must be 2-D")
        if self.Y.shape[1] != self.C.shape[1]:
            raise ShapeError(f"{self.Y.shape[1]} feature columns but {self.C.shape[1]} label columns")
        if not (np.all((self.C == 0) | (self.C == 1)) and np.all(self.C.sum(axis=0) == 1)):
            raise ShapeError("label matrix columns must be one-hot")
        if self.class_names is not None and len(self.class_names) != self.C.shape[0]:
            raise ShapeError(f"{len(self.class_names)} class names for {self.C.shape[0]} classes")

    @property
    def n_samples(self) -> int:
        return self.Y.shape[1]

    @property
    def n_features(self) -> int:
        return self.Y.shape[0]

    @property
    def n_classes(self) -> int:
        return self.C.shape[0]

    @property
    def labels(self) -> np.ndarray:
        return self.C.argmax(axis=0)

    def subset(self, idx) -> "Dataset":
        return Dataset(self.Y[:, idx], self.C[:, idx], self.class_names, self.feature_names)


def cls_label(x, y):
    """Level-set class index: 1 where ``x <= y``, else 0."""
    return (np.asarray(x) <= np.asarray(y)).astype(int)


def generate_cls(n: int, seed) -> Dataset:
    """Uniform points on the unit square labelled by the level sets of
    ``v(x, y) = 1 if x <= y else 0``; ``v`` is used as the class index."""
    if n < 1:
        raise ValueError("n must be positive")
    rng = np.random.default_rng(seed)
    pts = rng.uniform(0.0, 1.0, size=(2, n))
    labels = cls_label(pts[0], pts[1])
    return Dataset(pts, one_hot(labels, 2), ["x>y", "x<=y"], ["x", "y"])


def generate_perfume_standin(n_per_class: int, seed, n_classes: int = 20,
                             spread: float = 6.0) -> Dataset:
    """SYNTHETIC stand-in for the 20-perfume odour data: seeded Gaussian
    clusters in 2-D with centres on [20, 80]^2.

    Only meant to exercise the pipeline offline; it says nothing about the
    real perfume measurements.
    """
    rng = np.random.default_rng(seed)
    centres = rng.uniform(20.0, 80.0, size=(n_classes, 2))
    Y = np.concatenate([centres[c][:, None] + spread * rng.standard_normal((2, n_per_class))
                        for c in range(n_classes)], axis=1)
    labels = np.repeat(np.arange(n_classes), n_per_class)
    perm = rng.permutation(labels.size)
    names = [f"standin_{c:02d}" for c in range(n_classes)]
    return Dataset(Y[:, perm], one_hot(labels[perm], n_classes), names, ["x", "y"])


def train_test_split(dataset: Dataset, n_train: int, seed) -> tuple:
    rng = np.random.default_rng(seed)
    perm = rng.permutation(dataset.n_samples)
    return dataset.subset(np.sort(perm[:n_train])), dataset.subset(np.sort(perm[n_train:]))


def load_csv(path, feature_columns: Optional[Sequence[str]] = None,
             label_column: Optional[str] = None, delimiter: str = ",",
             class_names: Optional[Sequence[str]] = None) -> Dataset:
    """Read a headed CSV into a :class:`Dataset`.

    Without ``feature_columns`` every column except the label column is a
    feature; the label column defaults to the last one. Class indices follow
    first appearance unless ``class_names`` fixes the order.
    """
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh, delimiter=delimiter)
        try:
            header = next(reader)
        except StopIteration:
            raise DataFormatError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        label_column = label_column or header[-1]
        if label_column not in header:
            raise DataFormatError(f"{path}: no label column {label_column!r} in header {header}")
        if feature_columns is None:
            feature_columns = [h for h in header if h != label_column]
        missing = [c for c in feature_columns if c not in header]
        if missing:
            raise DataFormatError(f"{path}: feature columns {missing} not in header {header}")
        fidx = [header.index(c) for c in feature_columns]
        lidx = header.index(label_column)

        feats, raw_labels = [], []
        for row in reader:
            line = reader.line_num
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise DataFormatError(
                    f"{path}, line {line}: expected {len(header)} columns, got {len(row)}")
            try:
                feats.append([float(row[i]) for i in fidx])
            except ValueError as exc:
                raise DataFormatError(f"{path}, line {line}: {exc}") from None
            raw_labels.append(row[lidx].strip())
    if not feats:
        raise DataFormatError(f"{path}: no data rows")

    names = list(class_names) if class_names is not None else list(dict.fromkeys(raw_labels))
    lookup = {name: i for i, name in enumerate(names)}
    unknown = sorted(set(raw_labels) - set(lookup))
    if unknown:
        raise DataFormatError(f"{path}: labels {unknown} not among class names")
    labels = [lookup[s] for s in raw_labels]
    return Dataset(np.array(feats).T, one_hot(labels, len(names)), names, list(feature_columns))


def save_csv(dataset: Dataset, path, label_column: str = "label", delimiter: str = ",") -> None:
    names = dataset.feature_names or [f"feature_{i + 1}" for i in range(dataset.n_features)]
    classes = dataset.class_names or [str(i) for i in range(dataset.n_classes)]
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, delimiter=delimiter)
        w.writerow(list(names) + [label_column])
        for col, lab in zip(dataset.Y.T, dataset.labels):
            w.writerow([repr(float(v)) for v in col] + [classes[lab]])


def batch_normalize(Y, eps: float = BN_EPS) -> np.ndarray:
    """Standardize each feature (row) with its mean and population std."""
    Y = np.asarray(Y, dtype=float)
    D = Y - Y.mean(axis=1, keepdims=True)
    # rounding in the mean must not leak into constant rows
    D[np.ptp(Y, axis=1) == 0] = 0.0
    return D / (np.sqrt(np.mean(D * D, axis=1, keepdims=True)) + eps)


def sample_minibatch(dataset: Dataset, fraction: float, seed, iteration: int) -> Dataset:
    """Draw ``ceil(fraction * n)`` distinct samples and batch-normalize them.

    The draw depends only on ``(seed, iteration)``.
    """
    if not 0 < fraction <= 1:
        raise ValueError(f"fraction must lie in (0, 1], got {fraction}")
    n = dataset.n_samples
    m = math.ceil(round(fraction * n, 9))
    if m >= n:
        idx = np.arange(n)
    else:
        rng = np.random.default_rng([int(seed), int(iteration)])
        idx = np.sort(rng.choice(n, size=m, replace=False))
    batch = dataset.subset(idx)
    batch.Y = batch_normalize(batch.Y)
    return batch
