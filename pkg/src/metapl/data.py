"""Dataset generation, labeled/unlabeled splitting, batching, CSV ingestion.

Two-moon geometry (frozen here): the class-0 arc is the upper half of the
unit circle centered at the origin, sampled as (cos t, sin t) for
t ~ U[0, pi]; the class-1 arc is the same half-circle rotated 180 degrees
and recentered at (1, 0.5), i.e. (1 - cos t, 0.5 - sin t). The two arcs
interleave, which is what makes the clustering assumption informative.
Gaussian noise of the given standard deviation is added per coordinate.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np


class CsvParseError(ValueError):
    """Malformed row in a dataset CSV; message names the 1-based line."""


@dataclass(frozen=True)
class Dataset:
    """Feature matrix [n x d] with optional integer labels [n]."""

    features: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        if self.features.ndim != 2 or self.features.shape[0] < 1:
            raise ValueError(f"features must be a nonempty [n x d] matrix, got {self.features.shape}")
        if self.labels is not None and self.labels.shape != (self.features.shape[0],):
            raise ValueError("labels length must match feature rows")

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class Split:
    """Disjoint labeled / unlabeled / test partitions of one dataset.

    unlabeled_y holds the withheld ground truth; training code must never
    read it. It exists only so full-set accuracy can be evaluated.
    """

    labeled_x: np.ndarray
    labeled_y: np.ndarray
    unlabeled_x: np.ndarray
    unlabeled_y: np.ndarray
    test_x: np.ndarray
    test_y: np.ndarray

    def __post_init__(self):
        if self.labeled_x.shape[0] == 0:
            raise ValueError("labeled set must be nonempty")

    def eval_xy(self) -> tuple[np.ndarray, np.ndarray]:
        """Evaluation pool: the test set if present, else every example
        with known ground truth (labeled + withheld unlabeled truth)."""
        if self.test_x.shape[0] > 0:
            return self.test_x, self.test_y
        x = np.concatenate([self.labeled_x, self.unlabeled_x], axis=0)
        y = np.concatenate([self.labeled_y, self.unlabeled_y], axis=0)
        return x, y


def two_moon_generate(n_per_cluster: int, noise_sd: float, seed: int) -> Dataset:
    """Two interleaved half-circle clusters, n_per_cluster points each.

    Class 0 rows come first, then class 1. Deterministic per seed; with
    noise_sd = 0 every point lies exactly on its arc.
    """
    if n_per_cluster < 1:
        raise ValueError("n_per_cluster must be >= 1")
    if noise_sd < 0:
        raise ValueError("noise_sd must be >= 0")
    rng = np.random.default_rng(seed)
    t0 = rng.uniform(0.0, np.pi, n_per_cluster)
    t1 = rng.uniform(0.0, np.pi, n_per_cluster)
    upper = np.column_stack([np.cos(t0), np.sin(t0)])
    lower = np.column_stack([1.0 - np.cos(t1), 0.5 - np.sin(t1)])
    features = np.concatenate([upper, lower], axis=0)
    if noise_sd > 0:
        features = features + rng.normal(0.0, noise_sd, features.shape)
    labels = np.concatenate(
        [np.zeros(n_per_cluster, dtype=np.int64), np.ones(n_per_cluster, dtype=np.int64)]
    )
    return Dataset(features=features, labels=labels)


def label_split(ds: Dataset, n_labeled_per_class: int, n_test: int, seed: int) -> Split:
    """Per-class uniform labeled selection, then test, remainder unlabeled.

    Selection order is frozen: for each class in ascending order, a seeded
    permutation of that class's indices supplies the labeled prefix; a
    final permutation of everything left supplies the test prefix.
    """
    if ds.labels is None:
        raise ValueError("label_split needs ground-truth labels")
    rng = np.random.default_rng(seed)
    classes = np.unique(ds.labels)
    labeled_idx = []
    for c in classes:
        members = np.flatnonzero(ds.labels == c)
        if len(members) < n_labeled_per_class:
            raise ValueError(
                f"class {c} has {len(members)} examples, need {n_labeled_per_class} labeled"
            )
        labeled_idx.append(rng.permutation(members)[:n_labeled_per_class])
    labeled_idx = np.sort(np.concatenate(labeled_idx))

    remaining = np.setdiff1d(np.arange(ds.n), labeled_idx)
    if len(remaining) < n_test:
        raise ValueError(f"only {len(remaining)} examples left for a test set of {n_test}")
    test_idx = np.sort(rng.permutation(remaining)[:n_test])
    unlabeled_idx = np.setdiff1d(remaining, test_idx)

    return Split(
        labeled_x=ds.features[labeled_idx],
        labeled_y=ds.labels[labeled_idx],
        unlabeled_x=ds.features[unlabeled_idx],
        unlabeled_y=ds.labels[unlabeled_idx],
        test_x=ds.features[test_idx],
        test_y=ds.labels[test_idx],
    )


def index_batches(n: int, batch: int, rng: np.random.Generator):
    """Endless minibatch indices; each n-draw block is one permutation."""
    if not 1 <= batch <= n:
        raise ValueError(f"batch size {batch} not in [1, {n}]")
    perm = rng.permutation(n)
    pos = 0
    while True:
        if pos + batch <= n:
            idx = perm[pos : pos + batch]
            pos += batch
        else:
            head = perm[pos:]
            perm = rng.permutation(n)
            pos = batch - len(head)
            idx = np.concatenate([head, perm[:pos]])
        yield idx


def batch_index_stream(split: Split, batch_l: int, batch_u: int, seed: int):
    """Endless (labeled_idx, unlabeled_idx) pairs with independent cursors."""
    if split.unlabeled_x.shape[0] == 0:
        raise ValueError("unlabeled pool is empty")
    stream_l = index_batches(split.labeled_x.shape[0], batch_l, np.random.default_rng(seed))
    stream_u = index_batches(
        split.unlabeled_x.shape[0], batch_u, np.random.default_rng(seed + 1_000_003)
    )
    while True:
        yield next(stream_l), next(stream_u)


def batch_stream(split: Split, batch_l: int, batch_u: int, seed: int):
    """Endless (x_l, y_l, x_u) batches, reshuffled each epoch, seeded."""
    for idx_l, idx_u in batch_index_stream(split, batch_l, batch_u, seed):
        yield split.labeled_x[idx_l], split.labeled_y[idx_l], split.unlabeled_x[idx_u]


def csv_export(ds: Dataset, path) -> None:
    """Write `f0,...,f{d-1},label` rows; floats use repr for exact round-trip."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        header = [f"f{j}" for j in range(ds.dim)]
        if ds.labels is not None:
            header.append("label")
        w.writerow(header)
        for i in range(ds.n):
            row = [repr(float(v)) for v in ds.features[i]]
            if ds.labels is not None:
                row.append(str(int(ds.labels[i])))
            w.writerow(row)


def csv_ingest(path, d: int, k: int, label_column: int | None) -> Dataset:
    """Read a dataset CSV with d feature columns and an optional label column.

    label_column is the 0-based column index of the integer label, or None
    when the file has no labels. The first row is treated as a header.
    """
    features = []
    labels = [] if label_column is not None else None
    expected_cols = d + (1 if label_column is not None else 0)
    with open(path, "r", newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        for lineno, row in enumerate(reader, start=1):
            if lineno == 1:
                continue  # header
            if not row:
                continue
            if len(row) != expected_cols:
                raise CsvParseError(
                    f"{path}: line {lineno}: expected {expected_cols} fields, got {len(row)}"
                )
            try:
                feat = [float(row[j]) for j in range(len(row)) if j != label_column]
            except ValueError as exc:
                raise CsvParseError(f"{path}: line {lineno}: non-numeric field ({exc})") from None
            features.append(feat)
            if label_column is not None:
                try:
                    lab = int(row[label_column])
                except ValueError:
                    raise CsvParseError(
                        f"{path}: line {lineno}: label is not an integer"
                    ) from None
                if not 0 <= lab < k:
                    raise ValueError(f"{path}: line {lineno}: label {lab} outside [0, {k})")
                labels.append(lab)
    if not features:
        raise ValueError(f"{path}: no data rows")
    return Dataset(
        features=np.asarray(features, dtype=np.float64),
        labels=np.asarray(labels, dtype=np.int64) if labels is not None else None,
    )
