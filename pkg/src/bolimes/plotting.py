"""Figures written next to the delimited reports (PNG, Agg backend)."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.labelsize": 9,
    "axes.titlesize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.dpi": 100,
    "savefig.dpi": 150,
    "savefig.bbox": "tight",
}

STATUS_COLORS = {"Confirmed": "#2a9d8f", "Tentative": "#e9c46a", "Rejected": "#9aa0a6"}


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    # fixed metadata keeps the PNG bytes reproducible
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_sweep(result, path) -> Path:
    """Accuracy and weighted F1 against k, with the selected k marked."""
    ks = [p.k for p in result.curve]
    acc = [p.metrics.accuracy for p in result.curve]
    f1 = [p.metrics.f1 for p in result.curve]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5.0, 3.0))
        ax.plot(ks, acc, marker="o", ms=3, lw=1.2, label="accuracy")
        ax.plot(ks, f1, marker="s", ms=3, lw=1.0, ls="--", label="weighted F1")
        ax.axvline(result.k_star, color="k", lw=0.8, ls=":")
        ax.annotate(f"k*={result.k_star}", (result.k_star, result.best_accuracy),
                    xytext=(4, -12), textcoords="offset points")
        ax.set_xlabel("top-k features")
        ax.set_ylabel("held-out score")
        ax.set_ylim(min(min(acc), min(f1)) - 0.05, 1.02)
        ax.legend(loc="lower right", frameon=False)
        return _save(fig, path)


def plot_ranking(names, scores, path, top: int = 30, k_star: int | None = None) -> Path:
    """Horizontal bars of aggregated |coefficient| for the best-ranked features."""
    names = list(names)[:top]
    scores = np.asarray(scores, dtype=float)[:top]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(5.0, 0.9 + 0.18 * len(names)))
        y = np.arange(len(names))[::-1]
        colors = ["#264653" if k_star is None or i < k_star else "#a8b5bd" for i in range(len(names))]
        ax.barh(y, scores, color=colors)
        ax.set_yticks(y)
        ax.set_yticklabels(names)
        ax.set_xlabel("mean |local coefficient|")
        return _save(fig, path)


def plot_boruta(boruta, path, top: int = 40) -> Path:
    """Shadow reference per iteration and mean importance of the strongest features."""
    with plt.rc_context(STYLE):
        fig, (ax0, ax1) = plt.subplots(1, 2, figsize=(8.0, 3.0))
        thr = np.asarray(boruta.shadow_thresholds)
        ax0.plot(np.arange(1, thr.size + 1), thr, lw=1.0, color="#264653")
        ax0.set_xlabel("iteration")
        ax0.set_ylabel("shadow threshold")

        imp = np.asarray(boruta.mean_importance)
        order = np.argsort(-imp, kind="stable")[:top]
        colors = [STATUS_COLORS[boruta.status[i].value] for i in order]
        ax1.bar(np.arange(order.size), imp[order], color=colors)
        ax1.set_xlabel(f"top {order.size} features by mean importance")
        ax1.set_ylabel("mean importance")
        ax1.set_xticks([])
        handles = [plt.Rectangle((0, 0), 1, 1, color=c) for c in STATUS_COLORS.values()]
        ax1.legend(handles, STATUS_COLORS.keys(), frameon=False)
        return _save(fig, path)
