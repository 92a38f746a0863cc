"""Figures written next to the delimited outputs of the batch commands."""
from __future__ import annotations

from pathlib import Path
from typing import Dict, List, Mapping, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "font.size": 9,
    "axes.titlesize": 10,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "figure.dpi": 100,
    "savefig.bbox": "tight",
}
COLORS = ("#4c72b0", "#dd8452", "#55a868", "#c44e52", "#8172b3")
METRIC_LABELS = {"f": "fitness", "p": "precision", "g": "generalization", "s": "simplicity", "t": "time"}


def _save(fig, path) -> Path:
    path = Path(path)
    # no software/date stamps so reruns give identical files
    fig.savefig(path, format="png", metadata={"Software": None})
    plt.close(fig)
    return path


def average_rank_figure(ranks: Mapping[str, Mapping[str, float]], path) -> Path:
    """``ranks`` maps algorithm -> {metric: mean rank over logs}, with "R" for the overall mean."""
    algos = list(ranks)
    metrics = [m for m in next(iter(ranks.values())) if m != "R"] + ["R"]
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(1.2 + 0.9 * len(metrics), 3))
        width = 0.8 / len(algos)
        x = np.arange(len(metrics))
        for i, a in enumerate(algos):
            ax.bar(x + i * width - 0.4 + width / 2, [ranks[a][m] for m in metrics], width,
                   label=a, color=COLORS[i % len(COLORS)])
        ax.set_xticks(x, [METRIC_LABELS.get(m, "average") for m in metrics])
        ax.set_ylabel("mean rank (1 = best)")
        ax.legend(frameon=False, ncol=len(algos), loc="upper center", bbox_to_anchor=(0.5, 1.15))
        return _save(fig, path)


def performance_figure(report, path) -> Path:
    """Accuracy and macro F of the meta-model and both baselines, with run-to-run spread."""
    methods = ("meta_model", "majority", "random")
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 3))
        x = np.arange(len(methods))
        for j, (key, label) in enumerate((("accuracy_runs", "accuracy"), ("f_score_runs", "F-score"))):
            runs = [getattr(report.scores[m], key) for m in methods]
            ax.bar(x + (j - 0.5) * 0.38, [np.mean(r) for r in runs], 0.38,
                   yerr=[np.std(r) for r in runs], capsize=3, label=label, color=COLORS[j])
        ax.set_xticks(x, ["meta-model", "majority", "random"])
        ax.set_ylim(0, 1.05)
        ax.set_title(f"{report.repetitions} holdout runs, {int(report.split * 100)}% train")
        ax.legend(frameon=False)
        return _save(fig, path)


def importance_figure(ranked: Sequence, path, n: int = 10) -> Path:
    """Top and bottom ``n`` features by importance."""
    ranked = list(ranked)
    top, bottom = ranked[:n], ranked[-n:] if len(ranked) > n else []
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, 2 if bottom else 1, figsize=(8 if bottom else 4.5, 0.25 * n + 1.2),
                                 squeeze=False)
        for ax, part, title in zip(axes[0], (top, bottom), ("most important", "least important")):
            names = [p[0] for p in part][::-1]
            ax.barh(names, [p[1] for p in part][::-1], color=COLORS[0])
            ax.set_title(title)
            ax.set_xlabel("normalized Gini decrease")
        return _save(fig, path)


def mean_ranks(rank_rows: Sequence, roster: Sequence[str]) -> Dict[str, Dict[str, float]]:
    """Average RankRow ranks per algorithm and metric over all logs."""
    acc: Dict[str, Dict[str, List[float]]] = {a: {} for a in roster}
    for row in rank_rows:
        d = acc[row.algorithm]
        for m, r in row.ranks.items():
            d.setdefault(m, []).append(r)
        d.setdefault("R", []).append(row.average_rank)
    return {a: {m: float(np.mean(v)) for m, v in d.items()} for a, d in acc.items() if d}
