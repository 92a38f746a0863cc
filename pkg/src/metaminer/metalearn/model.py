"""Trained meta-model: a random forest over the feature manifest, plus persistence."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Sequence, Tuple

import numpy as np

from ..errors import DataError, EmptyDatabaseError, ModelMismatchError
from ..metafeatures import DIM, FEATURE_NAMES, FeatureVector, manifest_fingerprint
from .database import MetaDatabase
from .forest import Hyperparameters, RandomForest

MODEL_FORMAT = "metaminer-model"
MODEL_VERSION = 1


@dataclass(frozen=True)
class Recommendation:
    algorithm: str
    votes: Dict[str, float]


@dataclass(frozen=True)
class FeatureImportance:
    ranked: Tuple[Tuple[str, float], ...]
    normalized: bool  # False for a model without a single split

    def top(self, n: int):
        return self.ranked[:n]

    def bottom(self, n: int):
        return self.ranked[-n:] if n else ()


class MetaModel:
    def __init__(self, forest: RandomForest, roster: Sequence[str], fingerprint: str = None):
        self.forest = forest
        self.roster = tuple(roster)
        self.fingerprint = fingerprint or manifest_fingerprint()

    @property
    def seed(self) -> int:
        return self.forest.seed

    @property
    def hyperparameters(self) -> Hyperparameters:
        return self.forest.hp

    def _check(self, values) -> np.ndarray:
        x = np.asarray(values, dtype=float)
        if x.ndim != 1 or x.shape[0] != self.forest.n_features:
            raise ModelMismatchError(
                f"feature vector has {x.shape[-1] if x.ndim else 0} values, model expects {self.forest.n_features}")
        if self.fingerprint != manifest_fingerprint():
            raise ModelMismatchError("model was trained on a different feature manifest")
        return x

    def predict(self, features) -> Recommendation:
        values = features.values if isinstance(features, FeatureVector) else features
        x = self._check(values)
        votes = self.forest.votes(x)
        best = int(np.argmax(votes))
        return Recommendation(self.roster[best], {a: float(v) for a, v in zip(self.roster, votes)})

    def predict_many(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        for row in X:
            self._check(row)
        return self.forest.predict(X)

    def feature_importance(self) -> FeatureImportance:
        raw = self.forest.feature_importances()
        total = float(raw.sum())
        normalized = total > 0
        values = raw / total if normalized else np.zeros_like(raw)
        # stable sort keeps manifest order among equal importances
        order = sorted(range(len(values)), key=lambda i: -values[i])
        return FeatureImportance(tuple((FEATURE_NAMES[i], float(values[i])) for i in order), normalized)

    # -- persistence
    def to_dict(self) -> Dict:
        return {
            "format": MODEL_FORMAT, "version": MODEL_VERSION,
            "roster": list(self.roster), "manifest_fingerprint": self.fingerprint,
            "feature_names": list(FEATURE_NAMES), "forest": self.forest.to_dict(),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":")) + "\n"

    def save(self, path) -> None:
        Path(path).write_text(self.dumps(), encoding="utf-8")

    @classmethod
    def from_dict(cls, d) -> "MetaModel":
        if d.get("format") != MODEL_FORMAT:
            raise DataError("not a meta-model file")
        if d.get("version") != MODEL_VERSION:
            raise DataError(f"unsupported model version {d.get('version')}")
        forest = RandomForest.from_dict(d["forest"])
        for t in forest.trees:
            if any(f >= forest.n_features for f in t.feature):
                raise DataError("model split references a feature outside the manifest")
        return cls(forest, d["roster"], d["manifest_fingerprint"])

    @classmethod
    def load(cls, path) -> "MetaModel":
        try:
            d = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
        try:
            return cls.from_dict(d)
        except (KeyError, TypeError) as exc:
            raise DataError(f"{path}: malformed model ({exc})") from None


def fit_forest(X: np.ndarray, y: np.ndarray, n_classes: int, hp: Hyperparameters, seed: int) -> RandomForest:
    if X.shape[1] != DIM:
        raise ModelMismatchError(f"training matrix has {X.shape[1]} columns, manifest has {DIM}")
    return RandomForest(hp, seed).fit(X, y, n_classes)


def train_random_forest(db: MetaDatabase, hp: Hyperparameters = None, seed: int = 0) -> MetaModel:
    if not len(db):
        raise EmptyDatabaseError("cannot train on an empty meta-database")
    if db.fingerprint != manifest_fingerprint():
        raise ModelMismatchError("meta-database was built with a different feature manifest")
    X, y = db.matrix()
    return MetaModel(fit_forest(X, y, len(db.roster), hp or Hyperparameters(), seed), db.roster, db.fingerprint)


def importance_rows(imp: FeatureImportance) -> List[Dict[str, object]]:
    return [{"rank": i + 1, "feature": name, "importance": v} for i, (name, v) in enumerate(imp.ranked)]
