"""Report and stage-artifact serialization.

``report.json`` carries everything that is a deterministic function of
(data, config); wall-clock timings go to ``timing.json`` and to the
``train_s`` / ``select_s`` columns of ``results.csv`` so that reports from
identical runs are byte-identical.
"""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from .boruta import BorutaParams, BorutaResult, Status
from .data import Dataset
from .learners import ForestParams, GbtParams, TreeParams
from .lime import GlobalRanking, LimeParams
from .pipeline import PipelineConfig, SelectionResult

SCHEMA_VERSION = 1
RESULTS_HEADER = ["id", "dataset", "classes", "method", "samples", "top_k",
                  "acc", "prec", "rec", "f1", "train_s", "select_s"]
BORUTA_HEADER = ["id", "dataset", "confirmed", "tentative", "rejected", "select_s"]
STATUS_HEADER = ["index", "feature", "status", "hits", "trials", "mean_importance"]
RANKING_HEADER = ["feature_name", "score", "rank"]

REPORT_JSON = "report.json"
RESULTS_CSV = "results.csv"
TIMING_JSON = "timing.json"
BORUTA_CSV = "boruta.csv"
STATUS_CSV = "boruta_status.csv"
TRACE_CSV = "boruta_trace.csv"
RANKING_CSV = "ranking.csv"


class ReportError(RuntimeError):
    pass


# -- config ---------------------------------------------------------------

def classifier_kind(spec) -> str:
    return "forest" if isinstance(spec, ForestParams) else "gbt"


def config_to_dict(config: PipelineConfig) -> dict:
    d = asdict(config)
    d["classifier"] = {"kind": classifier_kind(config.classifier), **asdict(config.classifier)}
    return d


def _tree(d) -> TreeParams:
    return TreeParams(**d) if isinstance(d, dict) else d


def config_from_dict(d: dict, base: PipelineConfig = PipelineConfig()) -> PipelineConfig:
    """Build a config from a (possibly partial) dict; missing keys keep ``base``."""
    known = {f.name for f in fields(PipelineConfig)}
    unknown = set(d) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    updates = dict(d)
    if "boruta" in d:
        b = {**asdict(base.boruta), **d["boruta"]}
        b["tree"] = _tree(b["tree"])
        updates["boruta"] = BorutaParams(**b)
    if "lime" in d:
        updates["lime"] = LimeParams(**{**asdict(base.lime), **d["lime"]})
    if "classifier" in d:
        c = dict(d["classifier"])
        kind = c.pop("kind", classifier_kind(base.classifier))
        if kind == "forest":
            prev = asdict(base.classifier) if isinstance(base.classifier, ForestParams) else {}
            merged = {**prev, **c}
            merged["tree"] = _tree(merged.get("tree", TreeParams()))
            updates["classifier"] = ForestParams(**merged)
        elif kind == "gbt":
            prev = asdict(base.classifier) if isinstance(base.classifier, GbtParams) else {}
            updates["classifier"] = GbtParams(**{**prev, **c})
        else:
            raise ValueError(f"unknown classifier kind {kind!r}")
    merged = {f.name: getattr(base, f.name) for f in fields(PipelineConfig)}
    merged.update(updates)
    return PipelineConfig(**merged)


# -- report.json ----------------------------------------------------------

def boruta_to_dict(b: BorutaResult, scope: str) -> dict:
    names = b.feature_names
    return {
        **b.counts(),
        "iterations_run": b.iterations_run,
        "data_scope": scope,
        "confirmed_features": [names[i] for i in b.confirmed],
        "tentative_features": [names[i] for i in b.tentative],
        "shadow_thresholds": [float(t) for t in b.shadow_thresholds],
    }


def selection_to_dict(r: SelectionResult, ds: Dataset) -> dict:
    return {
        "k_star": r.k_star,
        "best_accuracy": r.best_accuracy,
        "x_opt": list(r.x_opt_names),
        "x_opt_indices": [int(i) for i in r.x_opt],
        "eval_seed": r.eval_seed,
        "curve": [{"k": p.k, **p.metrics.to_dict()} for p in r.curve],
        "model": r.f_opt.summary(),
    }


def build_report(result: SelectionResult, boruta: BorutaResult | None, ds: Dataset,
                 config: PipelineConfig) -> dict:
    scope = "train" if config.selection_on_train_only else "full"
    return {
        "schema_version": SCHEMA_VERSION,
        "dataset": ds.summary(),
        "config": config_to_dict(config),
        "boruta": boruta_to_dict(boruta, scope) if boruta is not None else None,
        "ranking": [
            {"rank": r + 1, "feature": ds.feature_names[i], "index": int(i), "score": float(s)}
            for r, (i, s) in enumerate(zip(result.ranked, result.ranking_scores))
        ],
        "selection": selection_to_dict(result, ds),
    }


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, allow_nan=False) + "\n"


def emit_report(result: SelectionResult, boruta: BorutaResult | None, ds: Dataset, config: PipelineConfig,
                out_dir, timing: dict | None = None) -> dict[str, Path]:
    """Write report.json, results.csv and timing.json into ``out_dir``."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        report = build_report(result, boruta, ds, config)
        paths = {"report": out / REPORT_JSON, "results": out / RESULTS_CSV, "timing": out / TIMING_JSON}
        paths["report"].write_text(dumps(report), encoding="utf-8")
        timing = {**result.timing, **(timing or {})}
        paths["timing"].write_text(json.dumps(timing, indent=2, sort_keys=True) + "\n", encoding="utf-8")
        select_s = sum(timing.get(k, 0.0) for k in ("boruta_s", "lime_s", "sweep_s"))
        m = next(p.metrics for p in result.curve if p.k == result.k_star)
        with paths["results"].open("w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(RESULTS_HEADER)
            w.writerow([1, ds.name, ds.n_classes, f"bolimes-{classifier_kind(config.classifier)}",
                        ds.n_samples, result.k_star,
                        f"{m.accuracy:.3f}", f"{m.precision:.3f}", f"{m.recall:.3f}", f"{m.f1:.3f}",
                        f"{timing.get('train_s', 0.0):.3f}", f"{select_s:.3f}"])
    except OSError as exc:
        raise ReportError(f"cannot write report to {out}: {exc}") from exc
    return paths


def read_report(path) -> dict:
    report = json.loads(Path(path).read_text(encoding="utf-8"))
    if report.get("schema_version") != SCHEMA_VERSION:
        raise ReportError(f"{path}: unsupported schema_version {report.get('schema_version')!r}")
    return report


def read_results(path) -> list[dict]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != RESULTS_HEADER:
            raise ReportError(f"{path}: unexpected header {reader.fieldnames}")
        return list(reader)


# -- Boruta stage files ---------------------------------------------------

def write_boruta(b: BorutaResult, ds: Dataset, out_dir) -> dict[str, Path]:
    """Table-2 style summary plus the per-feature status and threshold trace
    needed to resume from this stage."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"summary": out / BORUTA_CSV, "status": out / STATUS_CSV, "trace": out / TRACE_CSV}
    c = b.counts()
    with paths["summary"].open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(BORUTA_HEADER)
        w.writerow([1, ds.name, c["confirmed"], c["tentative"], c["rejected"], f"{b.elapsed:.3f}"])
    with paths["status"].open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(STATUS_HEADER)
        for i, name in enumerate(b.feature_names):
            w.writerow([i, name, b.status[i].value, int(b.hits[i]), int(b.trials[i]), repr(float(b.mean_importance[i]))])
    with paths["trace"].open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "threshold"])
        for it, thr in enumerate(b.shadow_thresholds, start=1):
            w.writerow([it, repr(float(thr))])
    return paths


def read_boruta(status_path) -> BorutaResult:
    """Rebuild a :class:`BorutaResult` from ``boruta_status.csv`` and its
    sibling trace and summary files."""
    status_path = Path(status_path)
    if status_path.is_dir():
        status_path = status_path / STATUS_CSV
    if not status_path.is_file():
        raise ReportError(f"Boruta status file not found: {status_path}")
    with status_path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != STATUS_HEADER:
            raise ReportError(f"{status_path}: unexpected header {reader.fieldnames}")
        rows = list(reader)
    trace_path = status_path.with_name(TRACE_CSV)
    thresholds = ()
    if trace_path.is_file():
        with trace_path.open(newline="", encoding="utf-8") as fh:
            thresholds = tuple(float(r["threshold"]) for r in csv.DictReader(fh))
    elapsed = 0.0
    summary_path = status_path.with_name(BORUTA_CSV)
    if summary_path.is_file():
        with summary_path.open(newline="", encoding="utf-8") as fh:
            elapsed = float(next(csv.DictReader(fh))["select_s"])
    return BorutaResult(
        feature_names=tuple(r["feature"] for r in rows),
        status=tuple(Status(r["status"]) for r in rows),
        hits=np.array([int(r["hits"]) for r in rows], dtype=np.int64),
        trials=np.array([int(r["trials"]) for r in rows], dtype=np.int64),
        iterations_run=len(thresholds),
        shadow_thresholds=thresholds,
        mean_importance=np.array([float(r["mean_importance"]) for r in rows]),
        elapsed=elapsed,
    )


# -- ranking stage file ---------------------------------------------------

def write_ranking(ranking: GlobalRanking, names, path) -> Path:
    """``feature_name,score,rank`` rows in rank order; scores at full precision."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(RANKING_HEADER)
        for r, j in enumerate(ranking.order, start=1):
            w.writerow([names[j], repr(float(ranking.scores[j])), r])
    return path


def read_ranking(path, ds: Dataset) -> tuple[np.ndarray, GlobalRanking]:
    """Return the ranked features as ascending original indices (``x_star``)
    and a :class:`GlobalRanking` over positions in ``x_star``."""
    path = Path(path)
    if not path.is_file():
        raise ReportError(f"ranking file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != RANKING_HEADER:
            raise ReportError(f"{path}: unexpected header {reader.fieldnames}")
        rows = sorted(reader, key=lambda r: int(r["rank"]))
    lookup = {name: i for i, name in enumerate(ds.feature_names)}
    missing = [r["feature_name"] for r in rows if r["feature_name"] not in lookup]
    if missing:
        raise ReportError(f"{path}: features not in the dataset: {missing[:5]}")
    if not rows:
        raise ReportError(f"{path}: empty ranking")
    ranked = np.array([lookup[r["feature_name"]] for r in rows], dtype=np.int64)
    x_star = np.sort(ranked)
    pos = {int(f): i for i, f in enumerate(x_star)}
    scores = np.zeros(x_star.size)
    for r in rows:
        scores[pos[lookup[r["feature_name"]]]] = float(r["score"])
    order = np.array([pos[int(f)] for f in ranked], dtype=np.int64)
    return x_star, GlobalRanking(order, scores)
