"""Local linear surrogate explanations and their aggregation into a global
feature ranking.

Perturbations are drawn in standardized space (training mean 0, std 1),
weighted by an exponential kernel on their Euclidean distance to the
explained instance, and fitted with a weighted ridge regression whose
intercept is not penalized.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .data import Dataset, Standardizer
from .seeding import derive_seed, parallel_map, sample_gaussian

AGGREGATES = ("mean", "sum", "median")


class SingularSurrogateError(np.linalg.LinAlgError):
    """The unpenalized surrogate system is rank deficient."""


@dataclass(frozen=True)
class LimeParams:
    n_perturbations: int = 5000
    kernel_width: float | None = None  # None -> 0.75 * sqrt(n_features)
    ridge_penalty: float = 1.0
    aggregate: str = "mean"
    seed: int = 42

    def __post_init__(self):
        if self.n_perturbations < 10:
            raise ValueError("n_perturbations must be >= 10")
        if self.kernel_width is not None and not self.kernel_width > 0:
            raise ValueError("kernel_width must be positive")
        if self.ridge_penalty < 0:
            raise ValueError("ridge_penalty must be >= 0")
        if self.aggregate not in AGGREGATES:
            raise ValueError(f"aggregate must be one of {AGGREGATES}")

    def width_for(self, n_features: int) -> float:
        return self.kernel_width if self.kernel_width is not None else 0.75 * math.sqrt(n_features)


@dataclass(frozen=True)
class PerturbationSet:
    Z: np.ndarray
    outputs: np.ndarray
    weights: np.ndarray


@dataclass(frozen=True)
class LimeExplanation:
    instance: int
    intercept: float
    coef: np.ndarray
    r2: float


@dataclass(frozen=True)
class GlobalRanking:
    order: np.ndarray
    scores: np.ndarray

    def top(self, k: int) -> np.ndarray:
        return self.order[:k]


def perturb(instance, n_perturbations: int, seed) -> np.ndarray:
    """``m x p`` standard-normal draws with row 0 replaced by ``instance``."""
    x = np.asarray(instance, dtype=np.float64).ravel()
    if x.size < 1:
        raise ValueError("instance must have at least one feature")
    Z = sample_gaussian(n_perturbations * x.size, 0.0, 1.0, seed).reshape(n_perturbations, x.size)
    Z[0] = x
    return Z


def proximity(distances, kernel_width: float) -> np.ndarray:
    """``exp(-d**2 / width**2)``."""
    if not kernel_width > 0:
        raise ValueError(f"kernel width must be positive, got {kernel_width}")
    d = np.asarray(distances, dtype=np.float64)
    if np.any(d < 0):
        raise ValueError("distances must be non-negative")
    return np.exp(-(d * d) / (kernel_width * kernel_width))


def fit_surrogate(Z, f_out, weights, ridge: float = 1.0, instance: int = -1) -> LimeExplanation:
    """Exact minimizer of ``sum w (f - b0 - Z b)^2 + ridge * |b|^2``.

    Solved through the normal equations ``(A'WA + ridge*I0) beta = A'W f``
    with ``A = [1 | Z]`` and ``I0`` the identity with its intercept entry
    zeroed.
    """
    Z = np.asarray(Z, dtype=np.float64)
    f = np.asarray(f_out, dtype=np.float64)
    w = np.asarray(weights, dtype=np.float64)
    m, p = Z.shape
    if f.shape != (m,) or w.shape != (m,):
        raise ValueError("Z, f_out and weights disagree on the number of samples")
    if ridge < 0:
        raise ValueError("ridge must be >= 0")
    A = np.empty((m, p + 1))
    A[:, 0] = 1.0
    A[:, 1:] = Z
    Aw = A * w[:, None]
    M = A.T @ Aw
    b = Aw.T @ f
    if ridge > 0:
        M[np.arange(1, p + 1), np.arange(1, p + 1)] += ridge
    elif np.linalg.matrix_rank(M) < p + 1:
        raise SingularSurrogateError("surrogate normal equations are singular; use ridge > 0")
    beta = np.linalg.solve(M, b)

    fitted = A @ beta
    wsum = w.sum()
    fbar = np.dot(w, f) / wsum
    ss_tot = np.dot(w, (f - fbar) ** 2)
    ss_res = np.dot(w, (f - fitted) ** 2)
    if ss_tot > 0:
        r2 = 1.0 - ss_res / ss_tot
    else:
        r2 = 1.0 if ss_res <= 1e-24 else 0.0
    return LimeExplanation(instance, float(beta[0]), beta[1:], float(r2))


def explain_instance(predict_fn: Callable[[np.ndarray], np.ndarray], instance, standardizer: Standardizer,
                     params: LimeParams = LimeParams(), seed=None, index: int = -1,
                     return_set: bool = False):
    """Explain one instance given in original units.

    ``predict_fn`` maps an original-unit matrix to one scalar per row.
    """
    z0 = standardizer.transform(np.asarray(instance, dtype=np.float64)[None, :])[0]
    seed = params.seed if seed is None else seed
    Z = perturb(z0, params.n_perturbations, seed)
    outputs = np.asarray(predict_fn(standardizer.inverse(Z)), dtype=np.float64)
    d = np.sqrt(((Z - z0) ** 2).sum(axis=1))
    weights = proximity(d, params.width_for(Z.shape[1]))
    expl = fit_surrogate(Z, outputs, weights, params.ridge_penalty, index)
    if return_set:
        return expl, PerturbationSet(Z, outputs, weights)
    return expl


def explain_all(model, ds: Dataset, params: LimeParams = LimeParams(), threads: int = 1,
                standardizer: Standardizer | None = None) -> list[LimeExplanation]:
    """One explanation per row of ``ds``.

    The explained output is the model's probability for the class it
    predicts on that row. Row ``i`` draws from stream ``lime/instance=i``.
    """
    st = standardizer or Standardizer.fit(ds.matrix)
    predicted = model.predict(ds.matrix)

    def one(i: int) -> LimeExplanation:
        c = int(predicted[i])
        return explain_instance(lambda X: model.predict_proba(X)[:, c], ds.matrix[i], st, params,
                                seed=derive_seed(params.seed, f"lime/instance={i}"), index=i)

    return parallel_map(one, range(ds.n_samples), threads)


def global_ranking(explanations: Sequence[LimeExplanation], aggregate: str = "mean") -> GlobalRanking:
    """Aggregate ``|coef|`` over explanations and order features by
    descending score, ties broken by ascending feature index."""
    if not explanations:
        raise ValueError("no explanations to aggregate")
    W = np.abs(np.vstack([e.coef for e in explanations]))
    if aggregate == "mean":
        scores = W.mean(axis=0)
    elif aggregate == "sum":
        scores = W.sum(axis=0)
    elif aggregate == "median":
        scores = np.median(W, axis=0)
    else:
        raise ValueError(f"aggregate must be one of {AGGREGATES}")
    order = np.lexsort((np.arange(scores.size), -scores))
    return GlobalRanking(order.astype(np.int64), scores)
