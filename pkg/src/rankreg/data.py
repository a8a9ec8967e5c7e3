"""Imbalanced binary datasets: synthetic generation, curation, splits, noise, CSV I/O."""
import csv
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigurationError, InvalidArgumentError, ParseError


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float)
        self.y = np.asarray(self.y, dtype=np.int64)
        if self.X.ndim != 2 or self.X.shape[0] != self.y.shape[0]:
            raise InvalidArgumentError("X must be (n, dim) with one label per row")
        if not np.all((self.y == 0) | (self.y == 1)):
            raise InvalidArgumentError("labels must be 0 or 1")
        if not np.all(np.isfinite(self.X)):
            raise InvalidArgumentError("features must be finite")

    def __len__(self):
        return self.y.size

    def __eq__(self, other):
        return (
            isinstance(other, Dataset)
            and np.array_equal(self.X, other.X)
            and np.array_equal(self.y, other.y)
        )

    @property
    def dim(self):
        return self.X.shape[1]

    @property
    def n_pos(self):
        return int(self.y.sum())

    @property
    def n_neg(self):
        return len(self) - self.n_pos

    def subset(self, idx):
        return Dataset(self.X[idx], self.y[idx])


def _round(x):
    return int(math.floor(x + 0.5))


def gen_gaussian_imbalanced(dim=2, n_neg=5000, ratio=100, separation=2.0, seed=0):
    """Negatives from N(0, I), positives from N(separation * e_0, I).

    One positive per ``ratio`` negatives (at least one).  Rows are shuffled.
    """
    if dim < 1 or n_neg < 1:
        raise ConfigurationError("dim and n_neg must be >= 1")
    if not ratio >= 1:
        raise ConfigurationError(f"ratio must be >= 1, got {ratio}")
    if not separation >= 0:
        raise ConfigurationError(f"separation must be >= 0, got {separation}")
    rng = np.random.default_rng(seed)
    n_pos = max(1, _round(n_neg / ratio))
    neg = rng.standard_normal((n_neg, dim))
    pos = rng.standard_normal((n_pos, dim))
    pos[:, 0] += separation
    X = np.concatenate([neg, pos])
    y = np.r_[np.zeros(n_neg, dtype=np.int64), np.ones(n_pos, dtype=np.int64)]
    perm = rng.permutation(len(y))
    return Dataset(X[perm], y[perm])


def subsample_to_ratio(dataset, ratio, seed=0):
    """Keep every negative and subsample positives to ``round(n_neg / ratio)``."""
    if not ratio >= 1:
        raise ConfigurationError(f"ratio must be >= 1, got {ratio}")
    target = max(1, _round(dataset.n_neg / ratio))
    pos_idx = np.flatnonzero(dataset.y == 1)
    if target > pos_idx.size:
        raise InvalidArgumentError(
            f"need {target} positives for ratio 1:{ratio}, dataset has {pos_idx.size}"
        )
    rng = np.random.default_rng(seed)
    keep = rng.choice(pos_idx, size=target, replace=False)
    idx = np.sort(np.r_[np.flatnonzero(dataset.y == 0), keep])
    return dataset.subset(idx)


def stratified_split(dataset, fractions, seed=0):
    """Partition per class in proportion to ``fractions``.

    Each class contributes ``floor(f * n_class)`` samples to each split and the
    remainder goes to the first split.  Splits keep the original row order.
    """
    fractions = [float(f) for f in fractions]
    if not fractions or any(f <= 0 for f in fractions) or abs(sum(fractions) - 1) > 1e-9:
        raise ConfigurationError(f"fractions must be positive and sum to 1, got {fractions}")
    rng = np.random.default_rng(seed)
    parts = [[] for _ in fractions]
    for label in (0, 1):
        idx = np.flatnonzero(dataset.y == label)
        idx = idx[rng.permutation(idx.size)]
        sizes = [math.floor(f * idx.size + 1e-9) for f in fractions]
        sizes[0] += idx.size - sum(sizes)
        start = 0
        for part, size in zip(parts, sizes):
            part.append(idx[start : start + size])
            start += size
    splits = []
    for k, part in enumerate(parts):
        split = dataset.subset(np.sort(np.concatenate(part)))
        if dataset.n_pos > 0 and split.n_pos == 0:
            split.meta["warning"] = "split has no positives"
            warnings.warn(f"split {k} received no positive samples", stacklevel=2)
        splits.append(split)
    return splits


def flip_labels(dataset, eta, seed=0):
    """Invert exactly ``round(eta * n)`` labels chosen uniformly without replacement."""
    if not 0 <= eta <= 0.5:
        raise ConfigurationError(f"eta must lie in [0, 0.5], got {eta}")
    n = len(dataset)
    k = _round(eta * n)
    rng = np.random.default_rng(seed)
    idx = rng.choice(n, size=k, replace=False)
    y = dataset.y.copy()
    y[idx] = 1 - y[idx]
    return Dataset(dataset.X.copy(), y)


def save_table(dataset, path):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"f{i}" for i in range(dataset.dim)] + ["label"])
        for x, label in zip(dataset.X.tolist(), dataset.y.tolist()):
            w.writerow([repr(v) for v in x] + [label])


def load_table(path):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise ParseError("empty file", 1)
    header = rows[0]
    if len(header) < 2 or header[-1] != "label":
        raise ParseError("header must be f0,...,f{d-1},label", 1)
    dim = len(header) - 1
    X, y = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        if len(row) != dim + 1:
            raise ParseError(f"expected {dim + 1} fields, found {len(row)}", lineno)
        if row[-1].strip() not in ("0", "1"):
            raise ParseError(f"label must be 0 or 1, found {row[-1]!r}", lineno)
        try:
            feats = [float(v) for v in row[:-1]]
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
        if not all(math.isfinite(v) for v in feats):
            raise ParseError("non-finite feature value", lineno)
        X.append(feats)
        y.append(int(row[-1]))
    if not y:
        raise ParseError("no samples after the header")
    return Dataset(np.array(X), np.array(y))
