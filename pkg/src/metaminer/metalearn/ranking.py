"""Per-log ranking of discovery algorithms by average per-metric rank."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Mapping, Sequence, Tuple

import numpy as np
from scipy.stats import rankdata

QUALITY_METRICS = ("f", "p", "g", "s")
TIME_METRIC = "t"
# +1: higher is better, -1: lower is better
DIRECTION = {"f": 1, "p": 1, "g": 1, "s": 1, "t": -1}


@dataclass(frozen=True)
class RankRow:
    log_id: str
    algorithm: str
    values: Dict[str, float]
    ranks: Dict[str, float]
    average_rank: float


@dataclass(frozen=True)
class Ranking:
    rows: Tuple[RankRow, ...]
    meta_target: str
    tied: Tuple[str, ...]

    @property
    def average_ranks(self) -> Dict[str, float]:
        return {r.algorithm: r.average_rank for r in self.rows}


def metric_set(include_time: bool) -> Tuple[str, ...]:
    return QUALITY_METRICS + ((TIME_METRIC,) if include_time else ())


def _value(scores, metric):
    if isinstance(scores, Mapping):
        return scores.get(metric)
    return getattr(scores, "metrics", {}).get(metric)


def rank_algorithms(
    scores: Mapping[str, object],
    include_time: bool = False,
    log_id: str = "",
    roster: Sequence[str] = None,
) -> Ranking:
    """
    Rank algorithms per metric (1 = best, ties share the average rank), then
    average the per-metric ranks. The meta-target is the algorithm with the
    lowest average rank; ties go to the earliest algorithm in ``roster``.

    ``scores`` maps algorithm -> QualityVector or a {metric: value} mapping.
    """
    roster = list(roster) if roster is not None else list(scores)
    algos = [a for a in roster if a in scores]
    if len(algos) < 2:
        raise ValueError("ranking needs at least two algorithms")
    metrics = metric_set(include_time)
    table = np.empty((len(algos), len(metrics)))
    for i, a in enumerate(algos):
        for j, m in enumerate(metrics):
            v = _value(scores[a], m)
            if v is None or (isinstance(v, float) and np.isnan(v)):
                raise ValueError(f"missing metric {m!r} for algorithm {a}")
            table[i, j] = v
    ranks = np.column_stack([
        rankdata(-DIRECTION[m] * table[:, j], method="average") for j, m in enumerate(metrics)
    ])
    avg = ranks.mean(axis=1)
    best = avg.min()
    winners = [a for a, r in zip(algos, avg) if r == best]
    rows = tuple(
        RankRow(log_id, a, dict(zip(metrics, map(float, table[i]))),
                dict(zip(metrics, map(float, ranks[i]))), float(avg[i]))
        for i, a in enumerate(algos)
    )
    return Ranking(rows, winners[0], tuple(winners) if len(winners) > 1 else ())
