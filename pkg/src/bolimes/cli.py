"""Command-line interface.

Subcommands::

    run     Boruta -> LIME ranking -> top-k sweep, writes every artifact
    boruta  Boruta stage only (boruta.csv, boruta_status.csv, boruta_trace.csv)
    rank    LIME ranking of a Boruta status file (ranking.csv)
    sweep   top-k sweep over a ranking file (report.json, results.csv)
    synth   write a planted-signal dataset plus its ground-truth sidecar

Exit codes: 0 success, 1 runtime failure (JSON error on stderr), 2 usage.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import plotting, report
from .data import DataError, SyntheticSpec, load_csv, synthesize, write_csv
from .learners import ForestParams, TreeParams
from .lime import AGGREGATES, GlobalRanking
from .pipeline import (NoRelevantFeaturesError, PipelineConfig, prepare, ranking_stage, run_bolimes,
                       selection_stage, sweep_stage)

log = logging.getLogger("bolimes")

SUBCOMMANDS = ("run", "boruta", "rank", "sweep", "synth")


@dataclass
class CliConfig:
    subcommand: str
    input: Path | None = None
    label: str = "class"
    out: Path = Path("bolimes_out")
    name: str | None = None
    seed: int = 42
    threads: int = 1
    verbosity: int = 0
    figures: bool = True
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    boruta_path: Path | None = None
    ranking_path: Path | None = None
    synth: SyntheticSpec | None = None


def _pipeline_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("pipeline")
    g.add_argument("--config", type=Path, help="JSON file with PipelineConfig fields; flags override it")
    g.add_argument("--selection-on-train-only", action="store_true", default=None,
                   help="run Boruta on the training rows only")
    g.add_argument("--standardize", action="store_true", default=None,
                   help="z-score features with training statistics before all stages")

    b = p.add_argument_group("boruta")
    b.add_argument("--boruta-trees", type=int, help="forest size (default 300)")
    b.add_argument("--boruta-depth", type=int, help="tree depth of the Boruta forest (default 10)")
    b.add_argument("--max-iter", type=int, help="maximum iterations (default 200)")
    b.add_argument("--alpha", type=float, help="significance level (default 0.01)")
    b.add_argument("--percentile", type=float, help="shadow reference percentile (default 100)")
    b.add_argument("--no-two-step", dest="two_step", action="store_false", default=None,
                   help="Bonferroni-only correction")
    b.add_argument("--shadow-scope", choices=("active", "all"),
                   help="shadow only active features (default) or all features every iteration")

    lm = p.add_argument_group("lime")
    lm.add_argument("--perturbations", type=int, help="samples per explanation (default 5000)")
    lm.add_argument("--kernel-width", type=float, help="default 0.75*sqrt(|X*|)")
    lm.add_argument("--ridge", type=float, help="surrogate ridge penalty (default 1.0)")
    lm.add_argument("--aggregate", choices=AGGREGATES, help="local-to-global rule (default mean)")

    e = p.add_argument_group("sweep")
    e.add_argument("--classifier", choices=("forest", "gbt"), help="sweep classifier (default forest)")
    e.add_argument("--trees", type=int, help="forest size (default 200)")
    e.add_argument("--depth", type=int, help="forest tree depth (default 10)")
    e.add_argument("--stages", type=int, help="boosting stages (default 50)")
    e.add_argument("--gbt-depth", type=int, help="boosting tree depth (default 10)")
    e.add_argument("--learning-rate", type=float, help="boosting learning rate (default 0.01)")
    e.add_argument("--k-min", type=int, help="first k of the sweep (default 10)")
    e.add_argument("--k-step", type=int, help="k stride (default 1)")
    e.add_argument("--test-fraction", type=float, help="held-out fraction (default 0.2)")
    e.add_argument("--cv-folds", type=int, help="use stratified k-fold instead of a holdout")


def _common_flags(p: argparse.ArgumentParser, data: bool = True) -> None:
    if data:
        p.add_argument("--input", type=Path, required=True, help="CSV with a header row")
        p.add_argument("--label", default="class", help="label column (default: class)")
        p.add_argument("--name", help="dataset name in reports (default: file stem)")
        p.add_argument("--out", type=Path, default=Path("bolimes_out"), help="output directory")
        p.add_argument("--no-figures", dest="figures", action="store_false", help="skip PNG figures")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads (default: $BOLIMES_THREADS or 1); never changes results")
    p.add_argument("--seed", type=int, default=None, help="master seed (default 42)")
    p.add_argument("-v", "--verbose", action="count", default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="bolimes", description="Boruta + LIME feature selection")
    sub = parser.add_subparsers(dest="subcommand", required=True, metavar="{" + ",".join(SUBCOMMANDS) + "}")

    p = sub.add_parser("run", help="full pipeline")
    _common_flags(p)
    _pipeline_flags(p)

    p = sub.add_parser("boruta", help="Boruta stage")
    _common_flags(p)
    _pipeline_flags(p)

    p = sub.add_parser("rank", help="LIME ranking stage")
    _common_flags(p)
    _pipeline_flags(p)
    p.add_argument("--boruta", dest="boruta_path", type=Path, required=True,
                   help="boruta_status.csv (or the directory holding it)")

    p = sub.add_parser("sweep", help="top-k sweep stage")
    _common_flags(p)
    _pipeline_flags(p)
    p.add_argument("--ranking", dest="ranking_path", type=Path, required=True, help="ranking.csv")
    p.add_argument("--boruta", dest="boruta_path", type=Path,
                   help="boruta_status.csv to include the Boruta section in report.json")

    p = sub.add_parser("synth", help="write a synthetic planted-signal dataset")
    _common_flags(p, data=False)
    p.add_argument("--n", type=int, default=200, help="samples")
    p.add_argument("--informative", type=int, default=10)
    p.add_argument("--noise", type=int, default=490)
    p.add_argument("--classes", type=int, default=3)
    p.add_argument("--separation", type=float, default=2.0, help="class mean gap in noise std units")
    p.add_argument("--label", default="class")
    p.add_argument("--out", type=Path, required=True, help="CSV path to write")
    return parser


def _overrides(ns: argparse.Namespace, base_kind: str) -> dict:
    """Translate flags into a partial PipelineConfig dict (unset flags omitted)."""
    def pick(**pairs):
        return {k: v for k, v in pairs.items() if v is not None}

    d: dict = pick(selection_on_train_only=ns.selection_on_train_only, standardize=ns.standardize,
                   k_min=ns.k_min, k_step=ns.k_step, test_fraction=ns.test_fraction, cv_folds=ns.cv_folds)
    b = pick(n_estimators=ns.boruta_trees, max_iter=ns.max_iter, alpha=ns.alpha, percentile=ns.percentile,
             two_step=ns.two_step, shadow_scope=ns.shadow_scope)
    if ns.boruta_depth is not None:
        b["tree"] = {"max_depth": ns.boruta_depth}
    if b:
        d["boruta"] = b
    lm = pick(n_perturbations=ns.perturbations, kernel_width=ns.kernel_width, ridge_penalty=ns.ridge,
              aggregate=ns.aggregate)
    if lm:
        d["lime"] = lm
    kind = ns.classifier or base_kind
    c = {"kind": kind} if ns.classifier else {}
    if kind == "gbt":
        c.update(pick(n_estimators=ns.stages, max_depth=ns.gbt_depth, learning_rate=ns.learning_rate))
    else:
        c.update(pick(n_estimators=ns.trees))
        if ns.depth is not None:
            c["tree"] = {"max_depth": ns.depth}
    if c:
        d["classifier"] = c
    return d


def _merge_tree(base: TreeParams, over: dict | TreeParams) -> TreeParams:
    return replace(base, **over) if isinstance(over, dict) else over


def _apply(base: PipelineConfig, d: dict) -> PipelineConfig:
    d = dict(d)
    if "boruta" in d and isinstance(d["boruta"].get("tree"), dict):
        d["boruta"] = {**d["boruta"], "tree": asdict(_merge_tree(base.boruta.tree, d["boruta"]["tree"]))}
    cls = d.get("classifier")
    if cls and isinstance(cls.get("tree"), dict):
        prev = base.classifier.tree if isinstance(base.classifier, ForestParams) else TreeParams()
        d["classifier"] = {**cls, "tree": asdict(_merge_tree(prev, cls["tree"]))}
    return report.config_from_dict(d, base)


def parse_args(argv=None) -> CliConfig:
    parser = build_parser()
    ns = parser.parse_args(argv)
    seed = 42 if ns.seed is None else ns.seed
    try:
        if ns.subcommand == "synth":
            spec = SyntheticSpec(ns.n, ns.informative, ns.noise, ns.classes, ns.separation, seed)
            return CliConfig("synth", label=ns.label, out=ns.out, seed=seed, verbosity=ns.verbose, synth=spec)

        config = PipelineConfig(seed=seed)
        if ns.config is not None:
            try:
                config = _apply(config, json.loads(ns.config.read_text(encoding="utf-8")))
            except OSError as exc:
                parser.error(f"cannot read --config: {exc}")
        config = replace(_apply(config, _overrides(ns, report.classifier_kind(config.classifier))), seed=seed)
        if not 0 < config.test_fraction < 0.5:
            raise ValueError(f"--test-fraction must be in (0, 0.5), got {config.test_fraction}")
        threads = ns.threads
        if threads is None:
            threads = int(os.environ.get("BOLIMES_THREADS", "1") or 1)
        if threads < 1:
            raise ValueError("--threads must be >= 1")
    except (ValueError, TypeError) as exc:
        parser.error(str(exc))
    return CliConfig(
        subcommand=ns.subcommand, input=ns.input, label=ns.label, out=ns.out, name=ns.name, seed=seed,
        threads=threads, verbosity=ns.verbose, figures=ns.figures, pipeline=config,
        boruta_path=getattr(ns, "boruta_path", None), ranking_path=getattr(ns, "ranking_path", None))


def _read_json(path: Path) -> dict:
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError):
        return {}


def _cmd_synth(cfg: CliConfig) -> None:
    ds, informative = synthesize(cfg.synth)
    cfg.out.parent.mkdir(parents=True, exist_ok=True)
    write_csv(ds, cfg.out, cfg.label)
    truth = {
        "spec": asdict(cfg.synth),
        "informative_indices": [int(i) for i in informative],
        "informative_features": [ds.feature_names[i] for i in informative],
    }
    cfg.out.with_suffix(".truth.json").write_text(json.dumps(truth, indent=2) + "\n", encoding="utf-8")


def _load(cfg: CliConfig):
    ds = load_csv(cfg.input, cfg.label, cfg.name)
    return prepare(ds, cfg.pipeline)


def _cmd_boruta(cfg: CliConfig) -> None:
    ds, protocol = _load(cfg)
    b = selection_stage(ds, protocol, cfg.pipeline, cfg.threads)
    report.write_boruta(b, ds, cfg.out)
    if cfg.figures:
        plotting.plot_boruta(b, cfg.out / "boruta.png")


def _cmd_rank(cfg: CliConfig) -> None:
    ds, protocol = _load(cfg)
    b = report.read_boruta(cfg.boruta_path)
    if b.feature_names != ds.feature_names:
        raise DataError("Boruta status file does not match the input's features")
    x_star = b.confirmed
    if x_star.size == 0:
        raise NoRelevantFeaturesError(b)
    t0 = time.perf_counter()
    ranking = ranking_stage(ds, protocol, x_star, cfg.pipeline, cfg.threads)
    lime_s = time.perf_counter() - t0
    names = [ds.feature_names[i] for i in x_star]
    report.write_ranking(ranking, names, cfg.out / report.RANKING_CSV)
    (cfg.out / report.TIMING_JSON).write_text(json.dumps({"lime_s": lime_s}, indent=2) + "\n", encoding="utf-8")
    if cfg.figures:
        plotting.plot_ranking([names[j] for j in ranking.order], ranking.scores[ranking.order],
                              cfg.out / "ranking.png")


def _write_run_outputs(cfg, ds, result, boruta, timing) -> None:
    report.emit_report(result, boruta, ds, cfg.pipeline, cfg.out, timing)
    if cfg.figures:
        plotting.plot_sweep(result, cfg.out / "sweep.png")
        plotting.plot_ranking([ds.feature_names[i] for i in result.ranked], result.ranking_scores,
                              cfg.out / "ranking.png", k_star=result.k_star)


def _cmd_sweep(cfg: CliConfig) -> None:
    ds, protocol = _load(cfg)
    x_star, ranking = report.read_ranking(cfg.ranking_path, ds)
    boruta = report.read_boruta(cfg.boruta_path) if cfg.boruta_path else None
    if boruta is not None and boruta.feature_names != ds.feature_names:
        raise DataError("Boruta status file does not match the input's features")
    t0 = time.perf_counter()
    result = sweep_stage(ds, protocol, x_star, ranking, cfg.pipeline, cfg.threads)
    timing = {"sweep_s": time.perf_counter() - t0}
    if boruta is not None:
        timing["boruta_s"] = boruta.elapsed
    lime_s = _read_json(cfg.ranking_path.with_name(report.TIMING_JSON)).get("lime_s")
    if lime_s is not None:
        timing["lime_s"] = lime_s
    _write_run_outputs(cfg, ds, result, boruta, timing)


def _cmd_run(cfg: CliConfig) -> None:
    ds = load_csv(cfg.input, cfg.label, cfg.name)
    try:
        result, boruta = run_bolimes(ds, cfg.pipeline, cfg.threads)
    except NoRelevantFeaturesError as exc:
        report.write_boruta(exc.boruta_result, ds, cfg.out)
        raise
    report.write_boruta(boruta, ds, cfg.out)
    names = [ds.feature_names[i] for i in result.x_star]
    order = np.searchsorted(result.x_star, result.ranked)
    scores = np.empty(result.x_star.size)
    scores[order] = result.ranking_scores
    report.write_ranking(GlobalRanking(order, scores), names, cfg.out / report.RANKING_CSV)
    _write_run_outputs(cfg, ds, result, boruta, {})
    if cfg.figures:
        plotting.plot_boruta(boruta, cfg.out / "boruta.png")


COMMANDS = {"run": _cmd_run, "boruta": _cmd_boruta, "rank": _cmd_rank, "sweep": _cmd_sweep, "synth": _cmd_synth}


def execute(cfg: CliConfig) -> int:
    level = logging.WARNING - 10 * min(cfg.verbosity, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        COMMANDS[cfg.subcommand](cfg)
    except (DataError, NoRelevantFeaturesError, report.ReportError, OSError, ValueError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    return 0


def main(argv=None) -> int:
    return execute(parse_args(argv))


if __name__ == "__main__":
    sys.exit(main())
