"""Bagged CART regression forest with impurity-based feature importances."""
from __future__ import annotations

import csv
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..errors import DegenerateTargetWarning
from .ols import DesignMatrix

LEAF = -1


@dataclass
class Tree:
    feature: np.ndarray         # split feature per node, LEAF for leaves
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray           # mean target per node
    gain: np.ndarray            # SSE reduction achieved by the node's split

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def depth(self) -> int:
        depth = np.zeros(self.n_nodes, dtype=int)
        for i in range(self.n_nodes):
            if self.feature[i] != LEAF:
                depth[self.left[i]] = depth[self.right[i]] = depth[i] + 1
        return int(depth.max())

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        node = np.zeros(len(X), dtype=np.int64)
        active = self.feature[node] != LEAF
        while active.any():
            idx = np.flatnonzero(active)
            nd = node[idx]
            go_left = X[idx, self.feature[nd]] <= self.threshold[nd]
            node[idx] = np.where(go_left, self.left[nd], self.right[nd])
            active[idx] = self.feature[node[idx]] != LEAF
        return self.value[node]


def _best_split(X, y, rows, features, min_leaf):
    """Exhaustive variance-reduction split over ``features``; (gain, feature, threshold) or None."""
    yr = y[rows]
    n = len(rows)
    total = yr.sum()
    base = float(((yr - total / n) ** 2).sum())
    best = None
    for f in features:
        x = X[rows, f]
        order = np.argsort(x, kind="stable")
        xs, ys = x[order], yr[order]
        left_n = np.arange(1, n)
        left_sum = np.cumsum(ys)[:-1]
        right_sum = total - left_sum
        # SSE(left) + SSE(right) = sum y^2 - (S_l^2 / n_l + S_r^2 / n_r); maximise the bracket
        score = left_sum ** 2 / left_n + right_sum ** 2 / (n - left_n)
        valid = (xs[1:] > xs[:-1]) & (left_n >= min_leaf) & (n - left_n >= min_leaf)
        if not valid.any():
            continue
        score = np.where(valid, score, -np.inf)
        k = int(np.argmax(score))
        gain = float(score[k] - total * total / n)
        if best is None or gain > best[0]:
            best = (gain, int(f), 0.5 * (xs[k] + xs[k + 1]))
    if best is None or not best[0] > 1e-12 * max(base, 1e-300):
        return None
    return best


def grow_tree(X, y, rows, rng, max_depth=8, min_leaf=5, max_features=None) -> Tree:
    n_feat = X.shape[1]
    m = n_feat if max_features is None else max(1, min(n_feat, int(max_features)))
    feature, threshold, left, right, value, gain = [], [], [], [], [], []

    def new_node(node_rows):
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(float(y[node_rows].mean()))
        gain.append(0.0)
        return len(feature) - 1

    stack = [(new_node(rows), rows, 0)]
    while stack:
        node, node_rows, depth = stack.pop()
        if depth >= max_depth or len(node_rows) < 2 * min_leaf:
            continue
        yr = y[node_rows]
        if np.all(yr == yr[0]):
            continue
        feats = np.arange(n_feat) if m == n_feat else np.sort(rng.choice(n_feat, size=m, replace=False))
        split = _best_split(X, y, node_rows, feats, min_leaf)
        if split is None:
            continue
        g, f, t = split
        mask = X[node_rows, f] <= t
        lrows, rrows = node_rows[mask], node_rows[~mask]
        feature[node], threshold[node], gain[node] = f, t, g
        left[node] = new_node(lrows)
        right[node] = new_node(rrows)
        stack.append((right[node], rrows, depth + 1))
        stack.append((left[node], lrows, depth + 1))
    return Tree(np.array(feature, dtype=np.int64), np.array(threshold), np.array(left, dtype=np.int64),
                np.array(right, dtype=np.int64), np.array(value), np.array(gain))


@dataclass
class ForestModel:
    trees: list[Tree]
    feature_names: list[str]
    seed: int
    n_trees: int
    max_depth: int
    min_leaf: int
    max_features: int
    bootstrap: bool = True
    meta: dict = field(default_factory=dict)

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = np.zeros(len(X))
        for t in self.trees:
            out += t.predict(X)
        return out / len(self.trees)

    def hyperparameters(self) -> dict:
        return {"n_trees": self.n_trees, "max_depth": self.max_depth, "min_leaf": self.min_leaf,
                "max_features": self.max_features, "bootstrap": self.bootstrap, "seed": self.seed}


def rf_fit(design: DesignMatrix, n_trees: int = 200, max_depth: int = 8, min_leaf: int = 5, seed: int = 0,
           max_features: int | None = None, bootstrap: bool = True, n_jobs: int = 1) -> ForestModel:
    """Fit ``n_trees`` CART trees; tree ``i`` draws from ``default_rng(seed + i)`` so results ignore scheduling."""
    X, y = design.X, design.y
    n, p = X.shape
    if n < 2 * min_leaf:
        raise ValueError(f"need at least {2 * min_leaf} rows, got {n}")
    if n_trees < 1 or max_depth < 0 or min_leaf < 1:
        raise ValueError("invalid forest hyperparameters")
    mtry = math.ceil(p / 3) if max_features is None else int(max_features)
    if np.all(y == y[0]):
        warnings.warn("target has zero variance; every tree is a single leaf", DegenerateTargetWarning,
                      stacklevel=2)

    def one(i):
        rng = np.random.default_rng(seed + i)
        rows = rng.integers(0, n, size=n) if bootstrap else np.arange(n)
        return grow_tree(X, y, np.sort(rows), rng, max_depth, min_leaf, mtry)

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            trees = list(pool.map(one, range(n_trees)))
    else:
        trees = [one(i) for i in range(n_trees)]
    return ForestModel(trees, list(design.column_names), seed, n_trees, max_depth, min_leaf, mtry, bootstrap)


@dataclass
class FeatureImportance:
    names: list[str]
    importances: np.ndarray
    degenerate: bool = False    # no split anywhere; importances are all zero

    def as_dict(self) -> dict[str, float]:
        return {k: float(v) for k, v in zip(self.names, self.importances)}

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\r\n")
            w.writerow(["feature", "importance"])
            for k, v in zip(self.names, self.importances):
                w.writerow([k, repr(float(v))])


def rf_importance(model: ForestModel) -> FeatureImportance:
    """Total SSE reduction per feature over all trees, normalised to sum to one."""
    total = np.zeros(len(model.feature_names))
    for t in model.trees:
        split = t.feature != LEAF
        np.add.at(total, t.feature[split], t.gain[split])
    s = math.fsum(total)
    if s <= 0:
        return FeatureImportance(model.feature_names, np.zeros_like(total), True)
    return FeatureImportance(model.feature_names, total / s)
