"""Repeated-holdout evaluation of the meta-model against majority and random baselines."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from ..errors import DataError
from .database import MetaDatabase
from .forest import Hyperparameters
from .model import fit_forest

REPORT_VERSION = 1
METHODS = ("meta_model", "majority", "random")


def accuracy(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    return float(np.mean(y_true == y_pred)) if len(y_true) else 0.0


def macro_f_score(y_true: np.ndarray, y_pred: np.ndarray) -> float:
    """Unweighted mean of per-class F1 over the classes present in ``y_true``."""
    classes = np.unique(y_true)
    if not len(classes):
        return 0.0
    scores = []
    for c in classes:
        tp = np.sum((y_true == c) & (y_pred == c))
        predicted = np.sum(y_pred == c)
        actual = np.sum(y_true == c)
        if tp == 0:
            scores.append(0.0)
            continue
        p, r = tp / predicted, tp / actual
        scores.append(2 * p * r / (p + r))
    return float(np.mean(scores))


def confusion_matrix(y_true, y_pred, n_classes: int) -> np.ndarray:
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (np.asarray(y_true), np.asarray(y_pred)), 1)
    return cm


def holdout_split(y: np.ndarray, split: float, rng: np.random.Generator) -> Tuple[np.ndarray, np.ndarray]:
    """
    Train/test indices. Stratified by class when every class has at least two
    members, otherwise a plain random split. Both sides are sorted.
    """
    n = len(y)
    if n < 2:
        raise DataError("holdout needs at least two meta-database rows; test split would be empty")
    classes, counts = np.unique(y, return_counts=True)
    test: List[int] = []
    if counts.min() >= 2:
        for c, n_c in zip(classes, counts):
            members = np.flatnonzero(y == c)
            k = min(n_c - 1, max(1, int(round(n_c * (1 - split)))))
            test.extend(rng.permutation(members)[:k].tolist())
    else:
        k = min(n - 1, max(1, int(round(n * (1 - split)))))
        test = rng.permutation(n)[:k].tolist()
    mask = np.zeros(n, dtype=bool)
    mask[test] = True
    if not mask.any():
        raise DataError("test split is empty")
    return np.flatnonzero(~mask), np.flatnonzero(mask)


@dataclass
class MethodScores:
    accuracy_runs: List[float] = field(default_factory=list)
    f_score_runs: List[float] = field(default_factory=list)

    @property
    def accuracy(self) -> float:
        return float(np.mean(self.accuracy_runs)) if self.accuracy_runs else 0.0

    @property
    def f_score(self) -> float:
        return float(np.mean(self.f_score_runs)) if self.f_score_runs else 0.0

    def add(self, y_true, y_pred):
        self.accuracy_runs.append(accuracy(y_true, y_pred))
        self.f_score_runs.append(macro_f_score(y_true, y_pred))

    def to_dict(self):
        return {
            "accuracy": self.accuracy, "f_score": self.f_score,
            "accuracy_runs": list(self.accuracy_runs), "f_score_runs": list(self.f_score_runs),
        }


@dataclass
class EvaluationReport:
    roster: Tuple[str, ...]
    split: float
    repetitions: int
    seed: int
    hyperparameters: Hyperparameters
    n_rows: int
    class_distribution: Dict[str, int]
    scores: Dict[str, MethodScores]
    confusion: np.ndarray  # summed over repetitions; rows true, columns predicted

    @property
    def meta_model(self) -> MethodScores:
        return self.scores["meta_model"]

    @property
    def majority(self) -> MethodScores:
        return self.scores["majority"]

    @property
    def random(self) -> MethodScores:
        return self.scores["random"]

    def to_dict(self) -> Dict:
        return {
            "version": REPORT_VERSION, "roster": list(self.roster), "split": self.split,
            "repetitions": self.repetitions, "seed": self.seed,
            "hyperparameters": self.hyperparameters.to_dict(), "n_rows": self.n_rows,
            "class_distribution": self.class_distribution,
            "f_score_averaging": "macro",
            "methods": {m: self.scores[m].to_dict() for m in METHODS},
            "confusion_matrix": {"labels": list(self.roster), "counts": self.confusion.tolist()},
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    def summary_csv(self) -> str:
        buf = io.StringIO(newline="")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["method", "accuracy", "f_score"])
        for m in METHODS:
            w.writerow([m, repr(self.scores[m].accuracy), repr(self.scores[m].f_score)])
        return buf.getvalue()


def evaluate_meta_model(
    db: MetaDatabase,
    split: float = 0.75,
    repetitions: int = 30,
    seed: int = 0,
    hp: Hyperparameters = None,
) -> EvaluationReport:
    """Each repetition reshuffles the holdout and reseeds the forest and the random baseline."""
    if not 0.0 < split < 1.0:
        raise ValueError("split must lie strictly between 0 and 1")
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    hp = hp or Hyperparameters()
    X, y = db.matrix()
    n_classes = len(db.roster)
    scores = {m: MethodScores() for m in METHODS}
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)

    for child in np.random.SeedSequence(seed).spawn(repetitions):
        split_ss, forest_ss, random_ss = child.spawn(3)
        train, test = holdout_split(y, split, np.random.default_rng(split_ss))
        forest = fit_forest(X[train], y[train], n_classes, hp, int(forest_ss.generate_state(1)[0]))
        y_test = y[test]
        pred = forest.predict(X[test])
        scores["meta_model"].add(y_test, pred)
        confusion += confusion_matrix(y_test, pred, n_classes)
        # bincount argmax picks the roster-first class on ties
        majority = int(np.argmax(np.bincount(y[train], minlength=n_classes)))
        scores["majority"].add(y_test, np.full(len(test), majority))
        scores["random"].add(y_test, np.random.default_rng(random_ss).integers(0, n_classes, len(test)))

    return EvaluationReport(
        db.roster, split, repetitions, int(seed), hp, len(db), db.class_distribution(), scores, confusion)
