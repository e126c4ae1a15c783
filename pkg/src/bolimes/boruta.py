"""All-relevant feature filtering with permuted shadow features.

Each iteration trains a forest on the still-active features next to a
freshly permuted copy of each of them and records a *hit* for every real
feature whose importance beats the shadow reference. Hit counts are then
tested against Binomial(trials, 1/2) to confirm or reject features.

``shadow_scope="all"`` permutes every original column each iteration
instead of only the active ones. The shadow reference then no longer
shrinks as features are rejected, which lowers false confirmations on
small samples at roughly twice the cost per iteration.
"""
from __future__ import annotations

import enum
import time
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .data import Dataset
from .learners import ForestParams, TreeParams, feature_importances, train_forest
from .seeding import derive_seed, permute


class Status(str, enum.Enum):
    CONFIRMED = "Confirmed"
    TENTATIVE = "Tentative"
    REJECTED = "Rejected"


_UNDECIDED, _CONFIRMED, _REJECTED = 0, 1, -1
_CODE_TO_STATUS = {_CONFIRMED: Status.CONFIRMED, _UNDECIDED: Status.TENTATIVE, _REJECTED: Status.REJECTED}


@dataclass(frozen=True)
class BorutaParams:
    n_estimators: int = 300
    max_iter: int = 200
    alpha: float = 0.01
    percentile: float = 100
    two_step: bool = True
    seed: int = 42
    tree: TreeParams = field(default_factory=TreeParams)
    shadow_scope: str = "active"

    def __post_init__(self):
        if self.shadow_scope not in ("all", "active"):
            raise ValueError(f"shadow_scope must be 'all' or 'active', got {self.shadow_scope!r}")
        if not 0 < self.alpha < 1:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        if not 1 <= self.percentile <= 100:
            raise ValueError(f"percentile must be in [1, 100], got {self.percentile}")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")
        if self.n_estimators < 1:
            raise ValueError("n_estimators must be >= 1")


@dataclass(frozen=True)
class BorutaResult:
    feature_names: tuple[str, ...]
    status: tuple[Status, ...]
    hits: np.ndarray
    trials: np.ndarray
    iterations_run: int
    shadow_thresholds: tuple[float, ...]
    mean_importance: np.ndarray
    elapsed: float = 0.0

    def _where(self, s: Status) -> np.ndarray:
        return np.array([i for i, st in enumerate(self.status) if st is s], dtype=np.int64)

    @property
    def confirmed(self) -> np.ndarray:
        """Indices of confirmed features, ascending; this is the selected set."""
        return self._where(Status.CONFIRMED)

    @property
    def tentative(self) -> np.ndarray:
        return self._where(Status.TENTATIVE)

    @property
    def rejected(self) -> np.ndarray:
        return self._where(Status.REJECTED)

    def counts(self) -> dict[str, int]:
        return {"confirmed": len(self.confirmed), "tentative": len(self.tentative),
                "rejected": len(self.rejected)}


def make_shadow(X, seed: int) -> np.ndarray:
    """``[X | shadows]`` where shadow column ``i`` is column ``i`` permuted
    with its own stream ``shadow=i`` under ``seed``."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] < 1:
        raise ValueError("make_shadow needs a 2-D matrix with at least one column")
    shadows = np.empty_like(X)
    for i in range(X.shape[1]):
        shadows[:, i] = permute(X[:, i], derive_seed(seed, f"shadow={i}"))
    return np.hstack([X, shadows])


def shadow_threshold(shadow_importances, percentile: float = 100) -> float:
    """Nearest-rank percentile of the shadow importances (100 gives the max)."""
    v = np.sort(np.asarray(shadow_importances, dtype=np.float64))
    if v.size == 0:
        raise ValueError("no shadow importances")
    rank = int(np.ceil(percentile / 100.0 * v.size))
    return float(v[min(max(rank, 1), v.size) - 1])


def binomial_tails(hits, trials) -> tuple[np.ndarray, np.ndarray]:
    """``P[H >= hits]`` and ``P[H <= hits]`` for ``H ~ Binomial(trials, 1/2)``."""
    hits = np.asarray(hits)
    return stats.binom.sf(hits - 1, trials, 0.5), stats.binom.cdf(hits, trials, 0.5)


def benjamini_hochberg(pvals, alpha: float) -> np.ndarray:
    """Rejection mask of the Benjamini-Hochberg step-up procedure."""
    p = np.asarray(pvals, dtype=np.float64)
    m = p.size
    if m == 0:
        return np.zeros(0, dtype=bool)
    order = np.argsort(p, kind="stable")
    below = p[order] <= alpha * np.arange(1, m + 1) / m
    reject = np.zeros(m, dtype=bool)
    if below.any():
        reject[order[: np.flatnonzero(below).max() + 1]] = True
    return reject


def decide(hits, trials: int, alpha: float, two_step: bool = True, n_features: int | None = None) -> np.ndarray:
    """Decision codes (1 confirm, -1 reject, 0 undecided) for a batch of
    undecided features that have each been tested ``trials`` times.

    With ``two_step`` the batch is FDR-corrected (Benjamini-Hochberg) and each
    survivor must also pass a Bonferroni bound ``alpha / trials`` for the
    repeated testing over iterations. Without it a single Bonferroni bound
    ``alpha / n_features`` is used.
    """
    hits = np.asarray(hits, dtype=np.int64)
    upper, lower = binomial_tails(hits, trials)
    if two_step:
        accept = benjamini_hochberg(upper, alpha) & (upper <= alpha / trials)
        reject = benjamini_hochberg(lower, alpha) & (lower <= alpha / trials)
    else:
        n = n_features if n_features is not None else hits.size
        accept = upper <= alpha / n
        reject = lower <= alpha / n
    out = np.zeros(hits.size, dtype=np.int64)
    out[accept] = _CONFIRMED
    out[reject & ~accept] = _REJECTED
    return out


def hit_decision(hits: int, trials: int, alpha: float = 0.01, two_step: bool = True) -> Status:
    """Decision for a single feature tested on its own."""
    if trials < 1 or not 0 <= hits <= trials:
        raise ValueError(f"need 0 <= hits <= trials and trials >= 1, got hits={hits}, trials={trials}")
    code = decide([hits], trials, alpha, two_step, n_features=1)[0]
    return _CODE_TO_STATUS[int(code)]


def boruta_run(ds: Dataset, params: BorutaParams = BorutaParams(), threads: int = 1,
               log=None) -> BorutaResult:
    """Iterate shadow comparisons until every feature is decided or
    ``max_iter`` is reached. Features still undecided end up Tentative."""
    t0 = time.perf_counter()
    X = ds.matrix
    n, p = X.shape
    code = np.zeros(p, dtype=np.int64)
    hits = np.zeros(p, dtype=np.int64)
    trials = np.zeros(p, dtype=np.int64)
    imp_sum = np.zeros(p)
    thresholds = []
    forest = ForestParams(params.n_estimators, params.tree, bootstrap=True)

    it = 0
    while it < params.max_iter and np.any(code == _UNDECIDED):
        it += 1
        active = np.flatnonzero(code != _REJECTED)
        a = active.size
        shadowed = active if params.shadow_scope == "active" else np.arange(p)
        shadows = make_shadow(X[:, shadowed], derive_seed(params.seed, f"boruta/iter={it}/shadow"))
        Xa = np.hstack([X[:, active], shadows[:, shadowed.size:]])
        model = train_forest(
            Xa, ds.labels,
            ForestParams(forest.n_estimators, forest.tree, True,
                         derive_seed(params.seed, f"boruta/iter={it}/forest")),
            n_classes=ds.n_classes, threads=threads)
        imp = feature_importances(model)
        thr = shadow_threshold(imp[a:], params.percentile)
        thresholds.append(thr)
        real = imp[:a]
        imp_sum[active] += real
        trials[active] += 1
        hits[active[real > thr]] += 1  # ties with the threshold are not hits

        undecided = np.flatnonzero(code == _UNDECIDED)
        code[undecided] = decide(hits[undecided], it, params.alpha, params.two_step, n_features=p)
        if log is not None:
            log(it, int((code == _CONFIRMED).sum()), int((code == _UNDECIDED).sum()),
                int((code == _REJECTED).sum()))

    mean_imp = np.divide(imp_sum, trials, out=np.zeros(p), where=trials > 0)
    return BorutaResult(
        feature_names=ds.feature_names,
        status=tuple(_CODE_TO_STATUS[int(c)] for c in code),
        hits=hits,
        trials=trials,
        iterations_run=it,
        shadow_thresholds=tuple(thresholds),
        mean_importance=mean_imp,
        elapsed=time.perf_counter() - t0,
    )
