"""Boruta filtering, LIME ranking and the top-k classifier sweep, end to end."""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np

from .boruta import BorutaParams, BorutaResult, boruta_run
from .data import Dataset, SplitPair, Standardizer, stratified_kfold, stratified_split
from .learners import ClassifierSpec, ForestParams, GbtParams, TrainedModel, TreeParams, train_classifier, train_forest
from .lime import GlobalRanking, LimeParams, explain_all, global_ranking
from .metrics import MetricsReport, confusion, evaluate, weighted_metrics
from .seeding import chunked, derive_seed, parallel_map

log = logging.getLogger(__name__)


class NoRelevantFeaturesError(RuntimeError):
    """Boruta confirmed nothing, so there is nothing to rank or sweep."""

    def __init__(self, boruta_result: BorutaResult):
        super().__init__(f"no relevant features: Boruta confirmed 0 of {len(boruta_result.status)} "
                         f"({boruta_result.counts()['tentative']} tentative)")
        self.boruta_result = boruta_result


@dataclass(frozen=True)
class PipelineConfig:
    """Run configuration. The master ``seed`` overrides the seeds inside
    ``boruta`` and ``lime``; every stage derives labelled streams from it."""

    boruta: BorutaParams = field(default_factory=BorutaParams)
    lime: LimeParams = field(default_factory=LimeParams)
    classifier: Union[ForestParams, GbtParams] = field(
        default_factory=lambda: ForestParams(200, TreeParams(max_depth=10)))
    k_min: int = 10
    k_step: int = 1
    test_fraction: float = 0.2
    cv_folds: int | None = None
    seed: int = 42
    selection_on_train_only: bool = False
    standardize: bool = False

    def __post_init__(self):
        if self.k_min < 1 or self.k_step < 1:
            raise ValueError("k_min and k_step must be >= 1")
        if self.cv_folds is not None and self.cv_folds < 2:
            raise ValueError("cv_folds must be >= 2")

    @property
    def eval_seed(self) -> int:
        return derive_seed(self.seed, "eval")


@dataclass(frozen=True)
class SweepPoint:
    k: int
    metrics: MetricsReport


@dataclass(frozen=True)
class SelectionResult:
    k_star: int
    best_accuracy: float
    curve: tuple[SweepPoint, ...]
    x_star: np.ndarray          # Boruta-confirmed indices, ascending
    ranked: np.ndarray          # x_star reordered by descending LIME score
    ranking_scores: np.ndarray  # score of each entry of ``ranked``
    x_opt: np.ndarray           # first k_star entries of ``ranked``
    x_opt_names: tuple[str, ...]
    f_opt: TrainedModel
    eval_seed: int
    timing: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class Protocol:
    """Fixed evaluation split(s) plus the rows the selection stages see."""

    folds: tuple[SplitPair, ...]
    fit_rows: np.ndarray

    @property
    def holdout(self) -> bool:
        return len(self.folds) == 1


def make_protocol(ds: Dataset, config: PipelineConfig) -> Protocol:
    split_seed = derive_seed(config.seed, "split")
    if config.cv_folds:
        folds = tuple(stratified_kfold(ds, config.cv_folds, split_seed))
        return Protocol(folds, np.arange(ds.n_samples))
    split = stratified_split(ds, config.test_fraction, split_seed)
    return Protocol((split,), split.train_index)


def prepare(ds: Dataset, config: PipelineConfig) -> tuple[Dataset, Protocol]:
    """Validate, optionally standardize (training statistics only) and split."""
    ds.validate()
    protocol = make_protocol(ds, config)
    if config.standardize:
        st = Standardizer.fit(ds.matrix[protocol.fit_rows])
        ds = Dataset(st.transform(ds.matrix), ds.labels, ds.feature_names, ds.name, ds.classes)
        protocol = make_protocol(ds, config)
    return ds, protocol


def selection_stage(ds: Dataset, protocol: Protocol, config: PipelineConfig, threads: int = 1) -> BorutaResult:
    data = ds.take(protocol.fit_rows) if config.selection_on_train_only else ds
    params = replace(config.boruta, seed=config.seed)

    def progress(it, c, t, r):
        log.debug("boruta iter %d: confirmed=%d tentative=%d rejected=%d", it, c, t, r)

    result = boruta_run(data, params, threads=threads, log=progress)
    log.info("boruta: %s after %d iterations (%.1fs)", result.counts(), result.iterations_run, result.elapsed)
    return result


def ranking_stage(ds: Dataset, protocol: Protocol, x_star, config: PipelineConfig,
                  threads: int = 1) -> GlobalRanking:
    """Rank the confirmed features by aggregated |LIME coefficient|.

    The black box is a forest with the Boruta forest's settings, trained on
    the training rows restricted to ``x_star``; training rows are explained.
    """
    x_star = np.asarray(x_star, dtype=np.int64)
    train = ds.take(protocol.fit_rows).select(x_star)
    bp = config.boruta
    blackbox = train_forest(train.matrix, train.labels,
                            ForestParams(bp.n_estimators, bp.tree, True, derive_seed(config.seed, "lime/blackbox")),
                            n_classes=ds.n_classes, threads=threads)
    lp = replace(config.lime, seed=config.seed)
    explanations = explain_all(blackbox, train, lp, threads=threads)
    return global_ranking(explanations, lp.aggregate)


def k_values(n_star: int, k_min: int, k_step: int) -> list[int]:
    ks = list(range(min(k_min, n_star), n_star + 1, k_step))
    if ks[-1] != n_star:
        ks.append(n_star)
    return ks


def _fit_score(ds: Dataset, protocol: Protocol, features, spec: ClassifierSpec, seed: int):
    """Train on each fold's training rows and pool the confusion matrices."""
    total = None
    model = None
    t0 = time.perf_counter()
    for split in protocol.folds:
        tr = ds.take(split.train_index).select(features)
        te = ds.take(split.test_index).select(features)
        model = train_classifier(spec, tr.matrix, tr.labels, seed, n_classes=ds.n_classes)
        cm = confusion(te.labels, model.predict(te.matrix), ds.n_classes)
        total = cm if total is None else total + cm
    seconds = time.perf_counter() - t0
    return weighted_metrics(total), model, seconds


def sweep_curve(ds: Dataset, protocol: Protocol, ranked, spec: ClassifierSpec, ks, seed: int,
                threads: int = 1) -> list[SweepPoint]:
    """Metrics for the top-k prefixes of ``ranked``; the evaluation rows are
    the same for every k, only the feature columns change."""
    ranked = np.asarray(ranked, dtype=np.int64)
    if max(ks) > ranked.size:
        raise ValueError(f"k={max(ks)} exceeds the ranking length {ranked.size}")
    out = parallel_map(lambda k: SweepPoint(k, _fit_score(ds, protocol, ranked[:k], spec, seed)[0]), ks, threads)
    return list(out)


def sweep_stage(ds: Dataset, protocol: Protocol, x_star, ranking: GlobalRanking, config: PipelineConfig,
                threads: int = 1) -> SelectionResult:
    x_star = np.asarray(x_star, dtype=np.int64)
    ranked = x_star[ranking.order]
    ks = k_values(ranked.size, config.k_min, config.k_step)
    seed = config.eval_seed
    spec = config.classifier

    curve: list[SweepPoint] = []
    best = (-1.0, None, None, 0.0)  # accuracy, k, model, train seconds
    for batch in chunked(ks, max(threads, 1)):
        results = parallel_map(lambda k: (k, *_fit_score(ds, protocol, ranked[:k], spec, seed)), batch, threads)
        for k, metrics, model, seconds in results:
            curve.append(SweepPoint(k, metrics))
            log.debug("k=%d accuracy=%.4f", k, metrics.accuracy)
            if metrics.accuracy > best[0]:  # strict: ties keep the smaller k
                best = (metrics.accuracy, k, model, seconds)
    acc, k_star, f_opt, train_s = best
    if not protocol.holdout:
        t0 = time.perf_counter()
        full = ds.select(ranked[:k_star])
        f_opt = train_classifier(spec, full.matrix, full.labels, seed, n_classes=ds.n_classes)
        train_s = time.perf_counter() - t0
    x_opt = ranked[:k_star]
    return SelectionResult(
        k_star=k_star,
        best_accuracy=acc,
        curve=tuple(curve),
        x_star=x_star,
        ranked=ranked,
        ranking_scores=ranking.scores[ranking.order],
        x_opt=x_opt,
        x_opt_names=tuple(ds.feature_names[i] for i in x_opt),
        f_opt=f_opt,
        eval_seed=seed,
        timing={"train_s": train_s},
    )


def run_bolimes(ds: Dataset, config: PipelineConfig = PipelineConfig(), threads: int = 1
                ) -> tuple[SelectionResult, BorutaResult]:
    """Select the feature subset and classifier with the best held-out accuracy.

    Raises :class:`NoRelevantFeaturesError` when Boruta confirms nothing.
    """
    ds, protocol = prepare(ds, config)
    t0 = time.perf_counter()
    boruta = selection_stage(ds, protocol, config, threads)
    t1 = time.perf_counter()
    x_star = boruta.confirmed
    if x_star.size == 0:
        raise NoRelevantFeaturesError(boruta)
    ranking = ranking_stage(ds, protocol, x_star, config, threads)
    t2 = time.perf_counter()
    result = sweep_stage(ds, protocol, x_star, ranking, config, threads)
    t3 = time.perf_counter()
    result.timing.update(boruta_s=t1 - t0, lime_s=t2 - t1, sweep_s=t3 - t2)
    return result, boruta


def retrain(ds: Dataset, result: SelectionResult, config: PipelineConfig) -> MetricsReport:
    """Re-fit the classifier on the reported subset and seed and re-score it."""
    ds, protocol = prepare(ds, config)
    if protocol.holdout:
        split = protocol.folds[0]
        tr = ds.take(split.train_index).select(result.x_opt)
        model = train_classifier(config.classifier, tr.matrix, tr.labels, result.eval_seed, n_classes=ds.n_classes)
        return evaluate(model, ds.take(split.test_index).select(result.x_opt))
    return _fit_score(ds, protocol, result.x_opt, config.classifier, result.eval_seed)[0]
