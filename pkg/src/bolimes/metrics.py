"""Classification metrics with support-weighted averaging."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    confusion: np.ndarray
    n_test: int

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "n_test": self.n_test,
            "confusion": self.confusion.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MetricsReport":
        return cls(float(d["accuracy"]), float(d["precision"]), float(d["recall"]), float(d["f1"]),
                   np.asarray(d["confusion"], dtype=np.int64), int(d["n_test"]))


def confusion(y_true, y_pred, n_classes: int) -> np.ndarray:
    """``C[i, j]`` counts samples of true class ``i`` predicted as ``j``."""
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise ValueError(f"length mismatch: {y_true.shape} vs {y_pred.shape}")
    for name, y in (("y_true", y_true), ("y_pred", y_pred)):
        if y.size and (y.min() < 0 or y.max() >= n_classes):
            raise ValueError(f"{name} has labels outside 0..{n_classes - 1}")
    flat = np.bincount(y_true * n_classes + y_pred, minlength=n_classes * n_classes)
    return flat.reshape(n_classes, n_classes)


def _ratio(num, den):
    # 0/0 -> 0
    out = np.zeros_like(num, dtype=np.float64)
    np.divide(num, den, out=out, where=den > 0)
    return out


def weighted_metrics(cm) -> MetricsReport:
    """Accuracy plus precision, recall and F1 averaged over classes with
    weights equal to each class's share of true samples."""
    cm = np.asarray(cm, dtype=np.int64)
    total = int(cm.sum())
    if cm.ndim != 2 or cm.shape[0] != cm.shape[1] or total <= 0:
        raise ValueError("confusion matrix must be square with a positive total")
    tp = np.diag(cm).astype(np.float64)
    support = cm.sum(axis=1).astype(np.float64)
    predicted = cm.sum(axis=0).astype(np.float64)
    precision = _ratio(tp, predicted)
    recall = _ratio(tp, support)
    f1 = _ratio(2 * precision * recall, precision + recall)
    w = support / total
    accuracy = float(tp.sum() / total)
    return MetricsReport(
        accuracy=accuracy,
        precision=float(np.dot(w, precision)),
        # support * (tp / support) == tp, so the weights cancel exactly
        recall=accuracy,
        f1=float(np.dot(w, f1)),
        confusion=cm,
        n_test=total,
    )


def evaluate(model, test) -> MetricsReport:
    """Score ``model`` on a :class:`~bolimes.data.Dataset`."""
    y_pred = model.predict(test.matrix)
    K = max(model.n_classes, test.n_classes)
    return weighted_metrics(confusion(test.labels, y_pred, K))
