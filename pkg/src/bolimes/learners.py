"""CART trees, random forests and gradient-boosted trees.

These serve as Boruta's importance engine, LIME's black box and the
classifier trained during the top-k sweep.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np

from . import _kernels
from .seeding import derive_seed, make_rng, parallel_map


@dataclass(frozen=True)
class TreeParams:
    max_depth: int = 10
    min_samples_leaf: int = 1
    n_candidate_features: Union[str, int] = "sqrt"

    def __post_init__(self):
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.min_samples_leaf < 1:
            raise ValueError("min_samples_leaf must be >= 1")
        nc = self.n_candidate_features
        if isinstance(nc, str):
            if nc not in ("sqrt", "all"):
                raise ValueError(f"n_candidate_features must be 'sqrt', 'all' or an int, got {nc!r}")
        elif int(nc) < 1:
            raise ValueError("n_candidate_features must be >= 1")

    def candidates(self, p: int) -> int:
        nc = self.n_candidate_features
        if nc == "all":
            return p
        if nc == "sqrt":
            return max(1, int(math.sqrt(p)))
        return min(int(nc), p)


@dataclass(frozen=True)
class ForestParams:
    n_estimators: int = 200
    tree: TreeParams = field(default_factory=TreeParams)
    bootstrap: bool = True
    seed: int = 42

    def __post_init__(self):
        if self.n_estimators < 1:
            raise ValueError("n_estimators must be >= 1")


@dataclass(frozen=True)
class GbtParams:
    n_estimators: int = 50
    max_depth: int = 10
    learning_rate: float = 0.01
    min_samples_leaf: int = 1

    def __post_init__(self):
        if self.n_estimators < 1:
            raise ValueError("n_estimators must be >= 1")
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if not 0 < self.learning_rate <= 1:
            raise ValueError(f"learning_rate must be in (0, 1], got {self.learning_rate}")


@dataclass(frozen=True)
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    impurity: np.ndarray
    n_node_samples: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    @property
    def is_leaf(self) -> np.ndarray:
        return self.left < 0

    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=np.int64)
        for node in range(self.n_nodes):  # pre-order: parents come first
            if self.left[node] >= 0:
                depth[self.left[node]] = depth[node] + 1
                depth[self.right[node]] = depth[node] + 1
        return int(depth.max())

    def impurity_decrease(self) -> np.ndarray:
        """Sample-weighted impurity decrease of every internal node (0 at leaves)."""
        dec = np.zeros(self.n_nodes)
        internal = np.flatnonzero(~self.is_leaf)
        if internal.size:
            w = self.n_node_samples * self.impurity / self.n_node_samples[0]
            dec[internal] = w[internal] - w[self.left[internal]] - w[self.right[internal]]
        return np.maximum(dec, 0.0)


def _fit_tree(XT, y, rows, n_classes, params: TreeParams, rng) -> Tree:
    out = _kernels.build_classifier(XT, y, rows, n_classes, params.max_depth,
                                    params.min_samples_leaf, params.candidates(XT.shape[0]), rng)
    return Tree(*out)


class _Packed:
    """All trees of an ensemble concatenated for one-pass traversal."""

    def __init__(self, trees):
        sizes = [t.n_nodes for t in trees]
        self.offsets = np.concatenate([[0], np.cumsum(sizes)]).astype(np.int64)
        self.feature = np.concatenate([t.feature for t in trees])
        self.threshold = np.concatenate([t.threshold for t in trees])
        self.left = np.concatenate([t.left for t in trees])
        self.right = np.concatenate([t.right for t in trees])
        self.value = np.concatenate([t.value for t in trees])

    def apply(self, X: np.ndarray) -> np.ndarray:
        return _kernels.apply_packed(X, self.feature, self.threshold, self.left, self.right, self.offsets)


@dataclass(frozen=True, eq=False)
class TrainedModel:
    """A fitted tree, forest or boosted ensemble. Immutable; predict is pure.

    For ``gbt`` models ``trees`` is laid out stage-major: stage ``s`` holds
    trees ``s*len(fitted_classes) ... (s+1)*len(fitted_classes)-1``.
    """

    kind: str
    n_classes: int
    n_features: int
    trees: tuple
    importances: np.ndarray | None = None
    init_score: np.ndarray | None = None
    learning_rate: float = 1.0
    fitted_classes: tuple = ()
    seed: int | None = None
    _packed: _Packed = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_packed", _Packed(self.trees) if self.trees else None)

    def predict_proba(self, X) -> np.ndarray:
        return predict_proba(self, X)

    def predict(self, X) -> np.ndarray:
        return predict(self, X)

    def summary(self) -> dict:
        out = {
            "kind": self.kind,
            "n_classes": self.n_classes,
            "n_features": self.n_features,
            "n_trees": len(self.trees),
            "max_depth_reached": max((t.depth() for t in self.trees), default=0),
            "seed": self.seed,
        }
        if self.kind == "gbt":
            out["learning_rate"] = self.learning_rate
        if self.importances is not None:
            out["importances"] = [float(v) for v in self.importances]
        return out


def _check_xy(X, y):
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ValueError(f"shape mismatch: X {X.shape} vs y {y.shape}")
    if X.shape[0] < 1:
        raise ValueError("need at least one sample")
    return X, y


def _n_classes(y, n_classes):
    k = int(y.max()) + 1
    if n_classes is None:
        return max(k, 1)
    if k > n_classes:
        raise ValueError(f"label {k - 1} out of range for {n_classes} classes")
    return n_classes


def _forest_importances(trees, p) -> np.ndarray:
    total = np.zeros(p)
    for t in trees:
        dec = t.impurity_decrease()
        internal = t.feature >= 0
        total += np.bincount(t.feature[internal], weights=dec[internal], minlength=p)
    total /= len(trees)
    s = total.sum()
    return total / s if s > 0 else total


def train_tree(X, y, params: TreeParams = TreeParams(), seed: int = 42,
               n_classes: int | None = None) -> TrainedModel:
    """Single CART classifier on all rows (no bootstrap)."""
    X, y = _check_xy(X, y)
    K = _n_classes(y, n_classes)
    rng = make_rng(seed)
    tree = _fit_tree(np.ascontiguousarray(X.T), y, np.arange(X.shape[0]), K, params, rng)
    return TrainedModel("tree", K, X.shape[1], (tree,), seed=seed)


def train_forest(X, y, params: ForestParams = ForestParams(), n_classes: int | None = None,
                 threads: int = 1) -> TrainedModel:
    """Random forest: tree ``t`` draws its bootstrap rows and candidate
    features from the stream ``tree=t`` under ``params.seed``."""
    X, y = _check_xy(X, y)
    K = _n_classes(y, n_classes)
    n = X.shape[0]
    XT = np.ascontiguousarray(X.T)

    def grow(t: int) -> Tree:
        rng = make_rng(derive_seed(params.seed, f"tree={t}"))
        rows = rng.integers(0, n, n) if params.bootstrap else np.arange(n)
        return _fit_tree(XT, y, rows.astype(np.int64), K, params.tree, rng)

    trees = tuple(parallel_map(grow, range(params.n_estimators), threads))
    return TrainedModel("forest", K, X.shape[1], trees,
                        importances=_forest_importances(trees, X.shape[1]), seed=params.seed)


def feature_importances(model: TrainedModel) -> np.ndarray:
    """Mean decrease in Gini impurity, averaged over trees and normalized
    to sum to 1 (all zeros when no tree ever split)."""
    if model.kind != "forest":
        raise TypeError(f"feature_importances needs a forest, got {model.kind!r}")
    return model.importances.copy()


def _softmax(F):
    F = F - F.max(axis=1, keepdims=True)
    E = np.exp(F)
    return E / E.sum(axis=1, keepdims=True)


def train_gbt(X, y, params: GbtParams = GbtParams(), seed: int = 42,
              n_classes: int | None = None) -> TrainedModel:
    """Multiclass gradient boosting with a softmax link.

    Each stage fits one squared-error regression tree per class to the
    residual ``onehot - p`` and sets leaf values with a single Newton step,
    ``(K-1)/K * sum(r) / sum(|r|(1-|r|))``, shrunk by the learning rate.
    """
    X, y = _check_xy(X, y)
    K = _n_classes(y, n_classes)
    counts = np.bincount(y, minlength=K)
    present = tuple(int(c) for c in np.flatnonzero(counts))
    with np.errstate(divide="ignore"):
        init = np.log(counts / counts.sum())  # -inf for unseen classes
    if len(present) < 2:
        return TrainedModel("gbt", K, X.shape[1], (), init_score=init,
                            learning_rate=params.learning_rate, fitted_classes=present, seed=seed)

    n = X.shape[0]
    XT = np.ascontiguousarray(X.T)
    rows = np.arange(n)
    Kp = len(present)
    onehot = (y[:, None] == np.array(present)[None, :]).astype(np.float64)
    F = np.tile(init[list(present)], (n, 1))
    scale = (Kp - 1) / Kp
    trees = []
    for stage in range(params.n_estimators):
        P = _softmax(F)
        for j, _ in enumerate(present):
            r = onehot[:, j] - P[:, j]
            rng = make_rng(derive_seed(seed, f"stage={stage}/class={j}"))
            out = _kernels.build_regressor(XT, r, rows, params.max_depth, params.min_samples_leaf,
                                           X.shape[1], rng)
            tree = Tree(*out)
            leaf = _kernels.apply_packed(X, tree.feature, tree.threshold, tree.left, tree.right,
                                         np.array([0, tree.n_nodes], dtype=np.int64))[:, 0]
            num = np.bincount(leaf, weights=r, minlength=tree.n_nodes)
            den = np.bincount(leaf, weights=np.abs(r) * (1.0 - np.abs(r)), minlength=tree.n_nodes)
            gamma = np.zeros(tree.n_nodes)
            ok = den > 1e-150
            gamma[ok] = scale * num[ok] / den[ok]
            tree = Tree(tree.feature, tree.threshold, tree.left, tree.right, gamma[:, None],
                        tree.impurity, tree.n_node_samples)
            trees.append(tree)
            F[:, j] += params.learning_rate * gamma[leaf]
    return TrainedModel("gbt", K, X.shape[1], tuple(trees), init_score=init,
                        learning_rate=params.learning_rate, fitted_classes=present, seed=seed)


def _check_X(model: TrainedModel, X) -> np.ndarray:
    X = np.ascontiguousarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    if X.shape[1] != model.n_features:
        raise ValueError(f"feature-count mismatch: model has {model.n_features}, X has {X.shape[1]}")
    return X


def _gbt_raw(model: TrainedModel, X: np.ndarray, n_stages: int | None = None) -> np.ndarray:
    n = X.shape[0]
    present = list(model.fitted_classes)
    F = np.tile(model.init_score, (n, 1))
    if model.trees:
        Kp = len(present)
        stages = len(model.trees) // Kp if n_stages is None else n_stages
        leaves = model._packed.apply(X)[:, : stages * Kp]
        contrib = model._packed.value[leaves, 0]  # n x (stages*Kp)
        F[:, present] += model.learning_rate * contrib.reshape(n, stages, Kp).sum(axis=1)
    return F


def predict_proba(model: TrainedModel, X) -> np.ndarray:
    """Per-class probabilities; each row sums to 1.

    Trees return their leaf class distribution, forests the fraction of
    trees voting for each class, boosted models the softmax of the scores.
    """
    X = _check_X(model, X)
    if model.kind == "tree":
        leaves = model._packed.apply(X)[:, 0]
        counts = model._packed.value[leaves]
        return counts / counts.sum(axis=1, keepdims=True)
    if model.kind == "forest":
        leaves = model._packed.apply(X)
        votes = np.argmax(model._packed.value[leaves], axis=2)  # n x trees, ties -> lower id
        P = np.zeros((X.shape[0], model.n_classes))
        for k in range(model.n_classes):
            P[:, k] = np.count_nonzero(votes == k, axis=1)
        return P / len(model.trees)
    if model.kind == "gbt":
        return _softmax(_gbt_raw(model, X))
    raise ValueError(f"unknown model kind {model.kind!r}")


def predict(model: TrainedModel, X) -> np.ndarray:
    """Row-wise argmax of :func:`predict_proba`; ties go to the lower class id."""
    return np.argmax(predict_proba(model, X), axis=1)


def staged_log_loss(model: TrainedModel, X, y) -> np.ndarray:
    """Training log-loss of a boosted model after 0, 1, ..., S stages."""
    if model.kind != "gbt":
        raise TypeError("staged_log_loss needs a gbt model")
    X = _check_X(model, X)
    y = np.asarray(y, dtype=np.int64)
    Kp = max(len(model.fitted_classes), 1)
    n_stages = len(model.trees) // Kp
    out = np.empty(n_stages + 1)
    for s in range(n_stages + 1):
        P = _softmax(_gbt_raw(model, X, s)) if model.trees else _softmax(_gbt_raw(model, X))
        out[s] = -np.mean(np.log(np.clip(P[np.arange(y.size), y], 1e-300, None)))
    return out


ClassifierSpec = Union[ForestParams, GbtParams]


def train_classifier(spec: ClassifierSpec, X, y, seed: int, n_classes: int | None = None,
                     threads: int = 1) -> TrainedModel:
    """Dispatch on the classifier parameter type; ``seed`` overrides the forest's."""
    if isinstance(spec, ForestParams):
        return train_forest(X, y, replace(spec, seed=seed), n_classes=n_classes, threads=threads)
    if isinstance(spec, GbtParams):
        return train_gbt(X, y, spec, seed=seed, n_classes=n_classes)
    raise TypeError(f"unsupported classifier spec {type(spec).__name__}")
