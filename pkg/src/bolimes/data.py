"""Datasets: CSV ingestion, stratified splitting, standardization and a
planted-signal synthetic generator."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .seeding import derive_seed, make_rng, permute, sample_gaussian


class DataError(ValueError):
    """Raised for malformed or unusable input data."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, copy=True)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Dataset:
    """Sample x feature matrix with dense class ids ``0..K-1``.

    ``classes[i]`` is the original label string for class id ``i``.
    """

    matrix: np.ndarray
    labels: np.ndarray
    feature_names: tuple[str, ...]
    name: str = "dataset"
    classes: tuple[str, ...] = ()

    def __post_init__(self):
        X = np.asarray(self.matrix, dtype=np.float64)
        y = np.asarray(self.labels)
        if X.ndim != 2:
            raise DataError("matrix must be 2-D")
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise DataError(f"label count {y.shape[0]} does not match row count {X.shape[0]}")
        if not np.all(np.isfinite(X)):
            raise DataError("matrix contains non-finite values")
        if y.size and (not np.issubdtype(y.dtype, np.integer) or y.min() < 0):
            raise DataError("labels must be non-negative integer class ids")
        y = y.astype(np.int64)
        if len(self.feature_names) != X.shape[1]:
            raise DataError("feature_names length does not match column count")
        if len(set(self.feature_names)) != len(self.feature_names):
            raise DataError("feature names must be unique")
        classes = tuple(self.classes) or tuple(str(c) for c in range(int(y.max()) + 1 if y.size else 0))
        object.__setattr__(self, "matrix", _frozen(X))
        object.__setattr__(self, "labels", _frozen(y))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "classes", classes)

    @property
    def n_samples(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_features(self) -> int:
        return self.matrix.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.classes)

    def validate(self) -> "Dataset":
        """Check the whole-dataset invariants (every class present, K >= 2)."""
        if self.n_classes < 2:
            raise DataError(f"{self.name}: need at least 2 classes, found {self.n_classes}")
        counts = np.bincount(self.labels, minlength=self.n_classes)
        missing = [self.classes[i] for i in np.flatnonzero(counts == 0)]
        if missing:
            raise DataError(f"{self.name}: classes without samples: {missing}")
        return self

    def take(self, rows) -> "Dataset":
        rows = np.asarray(rows, dtype=np.int64)
        return Dataset(self.matrix[rows], self.labels[rows], self.feature_names, self.name, self.classes)

    def select(self, columns) -> "Dataset":
        columns = np.asarray(columns, dtype=np.int64)
        names = tuple(self.feature_names[c] for c in columns)
        return Dataset(self.matrix[:, columns], self.labels, names, self.name, self.classes)

    def summary(self) -> dict:
        return {
            "name": self.name,
            "n_samples": self.n_samples,
            "n_features": self.n_features,
            "n_classes": self.n_classes,
            "classes": list(self.classes),
        }


def load_csv(path, label_column: str, name: str | None = None) -> Dataset:
    """Read a comma separated file with a header row.

    Labels are mapped to ids in order of first appearance. Errors name the
    1-based data row (header excluded) and the offending column.
    """
    path = Path(path)
    if not path.is_file():
        raise DataError(f"input file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        if label_column not in header:
            raise DataError(f"{path}: label column {label_column!r} not in header")
        if len(set(header)) != len(header):
            raise DataError(f"{path}: duplicate column names in header")
        li = header.index(label_column)
        feature_names = [h for i, h in enumerate(header) if i != li]
        rows, raw_labels = [], []
        for r, record in enumerate(reader, start=1):
            if not record:
                continue
            if len(record) != len(header):
                raise DataError(f"{path}: row {r} has {len(record)} cells, expected {len(header)}")
            values = []
            for i, cell in enumerate(record):
                if i == li:
                    continue
                try:
                    v = float(cell)
                except ValueError:
                    raise DataError(f"{path}: row {r}, column {header[i]!r}: cannot parse {cell!r}") from None
                if not math.isfinite(v):
                    raise DataError(f"{path}: row {r}, column {header[i]!r}: non-finite value {cell!r}")
                values.append(v)
            rows.append(values)
            raw_labels.append(record[li])
    if not rows:
        raise DataError(f"{path}: no data rows")
    classes: dict[str, int] = {}
    labels = [classes.setdefault(lab, len(classes)) for lab in raw_labels]
    if len(classes) < 2:
        raise DataError(f"{path}: single-class data ({next(iter(classes))!r})")
    X = np.array(rows, dtype=np.float64).reshape(len(rows), len(feature_names))
    return Dataset(X, np.array(labels, dtype=np.int64), tuple(feature_names),
                   name or path.stem, tuple(classes))


def write_csv(ds: Dataset, path, label_column: str = "class") -> None:
    """Write ``ds`` so that :func:`load_csv` reproduces it bit for bit."""
    if label_column in ds.feature_names:
        raise DataError(f"label column {label_column!r} collides with a feature name")
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow([*ds.feature_names, label_column])
        for row, lab in zip(ds.matrix, ds.labels):
            w.writerow([*(repr(float(v)) for v in row), ds.classes[lab]])


@dataclass(frozen=True)
class SplitPair:
    train: Dataset
    test: Dataset
    seed: int
    train_index: np.ndarray
    test_index: np.ndarray


def _test_counts(counts: np.ndarray, test_fraction: float) -> np.ndarray:
    """Per-class test sizes: floor, then hand out remainders by largest
    fractional part (lower class id wins ties) until the total reaches
    ceil(n * fraction)."""
    n = int(counts.sum())
    # tolerate float noise such as 100 * 0.3 == 30.000000000000004
    total = math.ceil(n * test_fraction - 1e-9)
    exact = counts * test_fraction
    base = np.floor(exact + 1e-9).astype(np.int64)
    frac = exact - base
    order = sorted(range(counts.size), key=lambda c: (-frac[c], c))
    for c in order[: max(0, total - int(base.sum()))]:
        base[c] += 1
    return base


def stratified_split(ds: Dataset, test_fraction: float = 0.2, seed: int = 42) -> SplitPair:
    if not 0 < test_fraction < 0.5:
        raise DataError(f"test_fraction must be in (0, 0.5), got {test_fraction}")
    counts = np.bincount(ds.labels, minlength=ds.n_classes)
    small = [ds.classes[c] for c in range(ds.n_classes) if 0 < counts[c] < 2]
    if small:
        raise DataError(f"classes with fewer than 2 samples cannot be split: {small}")
    n_test = _test_counts(counts, test_fraction)
    test_idx = []
    for c in range(ds.n_classes):
        members = np.flatnonzero(ds.labels == c)
        if members.size == 0:
            continue
        shuffled = permute(members, derive_seed(seed, f"split/class={c}"))
        test_idx.append(shuffled[: n_test[c]])
    test_index = np.sort(np.concatenate(test_idx))
    mask = np.ones(ds.n_samples, dtype=bool)
    mask[test_index] = False
    train_index = np.flatnonzero(mask)
    return SplitPair(ds.take(train_index), ds.take(test_index), seed,
                     _frozen(train_index), _frozen(test_index))


def stratified_kfold(ds: Dataset, n_folds: int = 5, seed: int = 42) -> list[SplitPair]:
    """Stratified k-fold: each class is shuffled and dealt round-robin to folds."""
    if n_folds < 2:
        raise DataError("n_folds must be >= 2")
    counts = np.bincount(ds.labels, minlength=ds.n_classes)
    if counts[counts > 0].min() < n_folds:
        raise DataError(f"every class needs at least {n_folds} samples for {n_folds}-fold CV")
    fold_of = np.empty(ds.n_samples, dtype=np.int64)
    offset = 0
    for c in range(ds.n_classes):
        members = permute(np.flatnonzero(ds.labels == c), derive_seed(seed, f"kfold/class={c}"))
        fold_of[members] = (np.arange(members.size) + offset) % n_folds
        offset += members.size
    out = []
    for k in range(n_folds):
        test_index = np.flatnonzero(fold_of == k)
        train_index = np.flatnonzero(fold_of != k)
        out.append(SplitPair(ds.take(train_index), ds.take(test_index), seed,
                             _frozen(train_index), _frozen(test_index)))
    return out


@dataclass(frozen=True)
class Standardizer:
    """Column statistics from a training matrix (population std)."""

    mean: np.ndarray
    std: np.ndarray
    constant: np.ndarray = field(repr=False)

    @classmethod
    def fit(cls, train: np.ndarray) -> "Standardizer":
        train = np.asarray(train, dtype=np.float64)
        mean = train.mean(axis=0)
        std = train.std(axis=0)
        constant = ~(std > 0)
        return cls(_frozen(mean), _frozen(std), _frozen(constant))

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.mean.size:
            raise DataError(f"feature-count mismatch: expected {self.mean.size} columns, got {X.shape[-1]}")
        safe = np.where(self.constant, 1.0, self.std)
        Z = (X - self.mean) / safe
        Z[:, self.constant] = 0.0
        return Z

    def inverse(self, Z: np.ndarray) -> np.ndarray:
        return np.asarray(Z) * np.where(self.constant, 0.0, self.std) + self.mean


def zscore(train: np.ndarray, apply_to: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Standardize ``apply_to`` with statistics from ``train``.

    Returns the standardized matrix and the per-column constant flag;
    constant columns come out as all zeros.
    """
    st = Standardizer.fit(train)
    return st.transform(apply_to), st.constant.copy()


@dataclass(frozen=True)
class SyntheticSpec:
    n_samples: int = 200
    n_informative: int = 10
    n_noise: int = 490
    n_classes: int = 3
    class_separation: float = 2.0
    seed: int = 7

    def __post_init__(self):
        if self.n_informative < 1:
            raise DataError("n_informative must be >= 1")
        if self.n_noise < 0 or self.n_classes < 2 or self.n_samples < 2 * self.n_classes:
            raise DataError("need n_noise >= 0, n_classes >= 2 and n_samples >= 2 * n_classes")
        if self.class_separation < 0:
            raise DataError("class_separation must be >= 0")


def synthesize(spec: SyntheticSpec) -> tuple[Dataset, np.ndarray]:
    """Planted-signal dataset and the sorted indices of its informative columns.

    Each informative column is N(0, 1) noise plus a class-dependent mean:
    the K classes are mapped to levels 0..K-1 by a per-column permutation,
    scaled by ``class_separation`` and centred, so adjacent levels sit
    ``class_separation`` standard deviations apart. Informative columns are
    scattered at random positions among the noise columns.
    """
    n, K = spec.n_samples, spec.n_classes
    p = spec.n_informative + spec.n_noise
    seed = spec.seed
    labels = permute(np.arange(n) % K, derive_seed(seed, "synth/labels"))
    X = sample_gaussian(n * p, 0.0, 1.0, derive_seed(seed, "synth/matrix")).reshape(n, p)
    informative = np.sort(permute(np.arange(p), derive_seed(seed, "synth/positions"))[: spec.n_informative])
    level_rng = make_rng(derive_seed(seed, "synth/levels"))
    centre = (K - 1) / 2.0
    for j in informative:
        levels = permute(np.arange(K, dtype=np.float64), level_rng)
        X[:, j] += spec.class_separation * (levels[labels] - centre)
    width = len(str(p - 1))
    names = tuple(f"x{j:0{width}d}" for j in range(p))
    ds = Dataset(X, labels, names, f"synthetic-{seed}", tuple(f"c{c}" for c in range(K)))
    return ds, informative
