"""Random forest of CART trees (Gini impurity) for a 0/1 target."""

from __future__ import annotations

import math

import numpy as np

DEFAULTS = {"n_trees": 100, "max_features": "sqrt", "max_depth": None, "min_samples_split": 2}


def _n_features(spec, d: int) -> int:
    if spec == "sqrt":
        return max(1, math.ceil(math.sqrt(d)))
    return max(1, min(d, int(spec)))


def _best_split(x: np.ndarray, y: np.ndarray):
    """Lowest weighted Gini split of one feature: (impurity, threshold) or None."""
    order = np.argsort(x, kind="stable")
    xs, ys = x[order], y[order]
    valid = xs[:-1] < xs[1:]
    if not valid.any():
        return None
    n = len(xs)
    n_left = np.arange(1, n)
    pos_left = np.cumsum(ys)[:-1]
    n_right = n - n_left
    pos_right = ys.sum() - pos_left
    # n * gini = 2 * pos * (n - pos) / n
    imp = 2.0 * (pos_left * (n_left - pos_left) / n_left + pos_right * (n_right - pos_right) / n_right)
    imp = np.where(valid, imp, np.inf)
    i = int(np.argmin(imp))
    thr = 0.5 * (xs[i] + xs[i + 1])
    if not xs[i] <= thr < xs[i + 1]:
        thr = xs[i]
    return float(imp[i]), float(thr)


def build_tree(X: np.ndarray, y: np.ndarray, rng: np.random.Generator, mtry: int,
               max_depth: int | None = None, min_samples_split: int = 2) -> dict:
    feature, threshold, left, right, value = [], [], [], [], []

    def new_node(idx) -> int:
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(float(y[idx].mean()))
        return len(feature) - 1

    root = np.arange(len(y))
    stack = [(new_node(root), root, 0)]
    while stack:
        node, idx, depth = stack.pop()
        yi = y[idx]
        pos = yi.sum()
        if pos == 0 or pos == len(yi) or len(idx) < min_samples_split:
            continue
        if max_depth is not None and depth >= max_depth:
            continue
        best = None
        tried = 0
        # visit features in random order until mtry non-constant ones were scored
        for f in rng.permutation(X.shape[1]):
            res = _best_split(X[idx, f], yi)
            if res is None:
                continue
            tried += 1
            if best is None or res[0] < best[0]:
                best = (res[0], res[1], int(f))
            if tried == mtry:
                break
        if best is None:
            continue
        _, thr, f = best
        go_left = X[idx, f] <= thr
        li, ri = idx[go_left], idx[~go_left]
        feature[node], threshold[node] = f, thr
        left[node] = new_node(li)
        right[node] = new_node(ri)
        stack.append((right[node], ri, depth + 1))
        stack.append((left[node], li, depth + 1))

    return {
        "feature": np.array(feature, dtype=np.int64),
        "threshold": np.array(threshold),
        "left": np.array(left, dtype=np.int64),
        "right": np.array(right, dtype=np.int64),
        "value": np.array(value),
    }


def tree_leaf_values(tree: dict, X: np.ndarray) -> np.ndarray:
    node = np.zeros(len(X), dtype=np.int64)
    feat = tree["feature"]
    rows = np.arange(len(X))
    active = feat[node] >= 0
    while active.any():
        r, nd = rows[active], node[active]
        f = feat[nd]
        goes_left = X[r, f] <= tree["threshold"][nd]
        node[r] = np.where(goes_left, tree["left"][nd], tree["right"][nd])
        active = feat[node] >= 0
    return tree["value"][node]


def fit_tree(X: np.ndarray, y: np.ndarray, hp: dict, seed: int, tree_index: int) -> dict:
    """One bootstrap tree; its randomness depends only on ``seed + tree_index``."""
    rng = np.random.default_rng(seed + tree_index)
    boot = rng.integers(0, len(X), len(X))
    mtry = _n_features(hp["max_features"], X.shape[1])
    return build_tree(X[boot], y[boot], rng, mtry, hp["max_depth"], int(hp["min_samples_split"]))


def fit(X: np.ndarray, y: np.ndarray, hp: dict, seed: int) -> dict:
    y = y.astype(np.int64)
    return {"trees": [fit_tree(X, y, hp, seed, i) for i in range(int(hp["n_trees"]))]}


def votes(params: dict, X: np.ndarray) -> np.ndarray:
    """(n_trees, n) array of 0/1 tree votes; a leaf votes positive at >= 0.5."""
    return np.array([tree_leaf_values(t, X) >= 0.5 for t in params["trees"]], dtype=np.int64)


def score(params: dict, X: np.ndarray) -> np.ndarray:
    return votes(params, X).sum(axis=0) / len(params["trees"])
