"""Feature selection by Boruta filtering, LIME ranking and a top-k sweep."""
from .boruta import BorutaParams, BorutaResult, Status, boruta_run, hit_decision
from .data import Dataset, DataError, Standardizer, SyntheticSpec, load_csv, stratified_split, synthesize, zscore
from .learners import ForestParams, GbtParams, TreeParams, TrainedModel, train_forest, train_gbt, train_tree
from .lime import GlobalRanking, LimeParams, explain_all, explain_instance, fit_surrogate, global_ranking
from .metrics import MetricsReport, evaluate, weighted_metrics
from .pipeline import NoRelevantFeaturesError, PipelineConfig, SelectionResult, run_bolimes
from .seeding import derive_seed, permute, sample_gaussian

__version__ = "0.1.0"

__all__ = [
    "BorutaParams", "BorutaResult", "Status", "boruta_run", "hit_decision",
    "Dataset", "DataError", "Standardizer", "SyntheticSpec", "load_csv", "stratified_split", "synthesize", "zscore",
    "ForestParams", "GbtParams", "TreeParams", "TrainedModel", "train_forest", "train_gbt", "train_tree",
    "GlobalRanking", "LimeParams", "explain_all", "explain_instance", "fit_surrogate", "global_ranking",
    "MetricsReport", "evaluate", "weighted_metrics",
    "NoRelevantFeaturesError", "PipelineConfig", "SelectionResult", "run_bolimes",
    "derive_seed", "permute", "sample_gaussian",
]
