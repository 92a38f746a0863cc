"""
Random forest classifier: bootstrap samples, Gini splits over a random
feature subset per node, majority vote over trees.

Trees are stored as flat arrays (feature, threshold, left, right, class
histogram) so a forest round-trips through plain JSON.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

LEAF = -1


@dataclass
class Hyperparameters:
    n_trees: int = 100
    max_depth: Optional[int] = None
    min_samples_leaf: int = 1
    features_per_split: Optional[int] = None  # default: ceil(sqrt(n_features))

    def resolved_features(self, n_features: int) -> int:
        k = self.features_per_split or math.ceil(math.sqrt(n_features))
        return max(1, min(n_features, k))

    def to_dict(self):
        return {
            "n_trees": self.n_trees, "max_depth": self.max_depth,
            "min_samples_leaf": self.min_samples_leaf, "features_per_split": self.features_per_split,
        }


@dataclass
class DecisionTree:
    feature: List[int] = field(default_factory=list)
    threshold: List[float] = field(default_factory=list)
    left: List[int] = field(default_factory=list)
    right: List[int] = field(default_factory=list)
    value: List[List[int]] = field(default_factory=list)
    importance: List[float] = field(default_factory=list)  # per-feature weighted Gini decrease

    def _add(self, hist) -> int:
        self.feature.append(LEAF)
        self.threshold.append(0.0)
        self.left.append(LEAF)
        self.right.append(LEAF)
        self.value.append([int(h) for h in hist])
        return len(self.feature) - 1

    def leaf_index(self, x: np.ndarray) -> int:
        node = 0
        while self.feature[node] != LEAF:
            node = self.left[node] if x[self.feature[node]] <= self.threshold[node] else self.right[node]
        return node

    def vote(self, x: np.ndarray) -> int:
        return int(np.argmax(self.value[self.leaf_index(x)]))

    @property
    def n_splits(self) -> int:
        return sum(1 for f in self.feature if f != LEAF)

    def to_dict(self):
        return {
            "feature": self.feature, "threshold": self.threshold,
            "left": self.left, "right": self.right, "value": self.value,
            "importance": self.importance,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(list(d["feature"]), [float(t) for t in d["threshold"]], list(d["left"]),
                   list(d["right"]), [list(v) for v in d["value"]], [float(x) for x in d.get("importance", [])])


def _gini(counts: np.ndarray) -> np.ndarray:
    n = counts.sum(axis=-1)
    with np.errstate(invalid="ignore", divide="ignore"):
        p = counts / n[..., None]
    return np.where(n > 0, 1.0 - (p * p).sum(axis=-1), 0.0)


def _best_split(X: np.ndarray, Y: np.ndarray, features: np.ndarray, min_leaf: int):
    """
    Best (feature, threshold, impurity decrease) among ``features``; Y is
    one-hot. Returns None when no split leaves ``min_leaf`` samples per side
    with distinct values. Ties keep the earliest feature, then lowest threshold.
    """
    n = X.shape[0]
    Xs = X[:, features]
    order = np.argsort(Xs, axis=0, kind="stable")
    xs = np.take_along_axis(Xs, order, axis=0)  # (n, F)
    ys = Y[order]  # (n, F, C)
    left = np.cumsum(ys, axis=0)[:-1]  # split after position i: (n-1, F, C)
    total = Y.sum(axis=0)
    right = total - left
    nl = np.arange(1, n)[:, None]
    nr = n - nl
    weighted = (nl * _gini(left) + nr * _gini(right)) / n  # (n-1, F)
    valid = (xs[1:] > xs[:-1]) & (nl >= min_leaf) & (nr >= min_leaf)
    if not valid.any():
        return None
    weighted = np.where(valid, weighted, np.inf)
    # column-major argmin: earliest feature in the sampled order wins ties
    flat = np.argmin(weighted.T)
    f_idx, pos = divmod(int(flat), n - 1)
    parent = float(_gini(total[None, :])[0])
    thr = float((xs[pos, f_idx] + xs[pos + 1, f_idx]) / 2.0)
    if not thr < xs[pos + 1, f_idx]:  # midpoint rounding on adjacent floats
        thr = float(xs[pos, f_idx])
    return int(features[f_idx]), thr, parent - float(weighted[pos, f_idx])


def grow_tree(X: np.ndarray, y: np.ndarray, n_classes: int, hp: Hyperparameters, rng: np.random.Generator) -> DecisionTree:
    n, d = X.shape
    k = hp.resolved_features(d)
    Y = np.eye(n_classes, dtype=np.int64)[y]
    tree = DecisionTree(importance=[0.0] * d)
    root_n = n

    def build(idx: np.ndarray, depth: int) -> int:
        hist = Y[idx].sum(axis=0)
        node = tree._add(hist)
        pure = np.count_nonzero(hist) <= 1
        if pure or (hp.max_depth is not None and depth >= hp.max_depth) or len(idx) < 2 * hp.min_samples_leaf:
            return node
        perm = rng.permutation(d)
        split = _best_split(X[idx], Y[idx], perm[:k], hp.min_samples_leaf)
        if split is None and k < d:
            split = _best_split(X[idx], Y[idx], perm[k:], hp.min_samples_leaf)
        if split is None:
            return node
        f, thr, decrease = split
        mask = X[idx, f] <= thr
        tree.feature[node] = f
        tree.threshold[node] = thr
        tree.importance[f] += decrease * len(idx) / root_n
        tree.left[node] = build(idx[mask], depth + 1)
        tree.right[node] = build(idx[~mask], depth + 1)
        return node

    build(np.arange(n), 0)
    return tree


class RandomForest:
    def __init__(self, hp: Hyperparameters = None, seed: int = 0):
        self.hp = hp or Hyperparameters()
        self.seed = int(seed)
        self.trees: List[DecisionTree] = []
        self.n_classes = 0
        self.n_features = 0

    def fit(self, X, y, n_classes: int) -> "RandomForest":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=np.int64)
        self.n_classes = int(n_classes)
        self.n_features = X.shape[1]
        children = np.random.SeedSequence(self.seed).spawn(self.hp.n_trees)
        self.trees = []
        for ss in children:
            rng = np.random.default_rng(ss)
            boot = rng.integers(0, len(y), len(y))
            self.trees.append(grow_tree(X[boot], y[boot], self.n_classes, self.hp, rng))
        return self

    def votes(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        counts = np.zeros(self.n_classes)
        for t in self.trees:
            counts[t.vote(x)] += 1
        return counts / max(1, len(self.trees))

    def predict(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return np.array([int(np.argmax(self.votes(x))) for x in X], dtype=np.int64)

    def feature_importances(self) -> np.ndarray:
        """Mean (over trees) weighted Gini decrease per feature, unnormalized."""
        if not self.trees:
            return np.zeros(self.n_features)
        return np.mean([t.importance for t in self.trees], axis=0)

    def to_dict(self) -> Dict:
        return {
            "hyperparameters": self.hp.to_dict(), "seed": self.seed,
            "n_classes": self.n_classes, "n_features": self.n_features,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d) -> "RandomForest":
        rf = cls(Hyperparameters(**d["hyperparameters"]), d["seed"])
        rf.n_classes = int(d["n_classes"])
        rf.n_features = int(d["n_features"])
        rf.trees = [DecisionTree.from_dict(t) for t in d["trees"]]
        return rf
