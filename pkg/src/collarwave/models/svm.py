"""Linear SVM trained with Pegasos (hinge loss + L2, step 1/(lam*t)).

Rows are visited in a seeded permutation each epoch. A constant 1 is appended
to every row so the intercept is learned as an ordinary (regularised) weight.
The returned model is the running average of every iterate (averaged Pegasos).
"""

from __future__ import annotations

import numpy as np

from .logreg import sigmoid

DEFAULTS = {"lam": 1e-2, "epochs": 200}


def _augment(X: np.ndarray) -> np.ndarray:
    return np.hstack([X, np.ones((len(X), 1))])


def primal_objective(w: np.ndarray, Xa: np.ndarray, ys: np.ndarray, lam: float, sw: np.ndarray) -> float:
    hinge = np.maximum(0.0, 1.0 - ys * (Xa @ w))
    return float(0.5 * lam * np.dot(w, w) + np.dot(sw, hinge) / sw.sum())


def pegasos(
    X: np.ndarray, y: np.ndarray, lam: float, epochs: int, seed: int, sample_weight: np.ndarray | None = None
) -> tuple[np.ndarray, list[float]]:
    """Return (averaged weights incl. bias, objective of the running average after each epoch)."""
    Xa = _augment(X)
    ys = np.where(y == 1, 1.0, -1.0)
    n, d = Xa.shape
    sw = np.ones(n) if sample_weight is None else np.asarray(sample_weight, dtype=np.float64)
    sw_scaled = sw * n / sw.sum()
    radius = 1.0 / np.sqrt(lam)
    rng = np.random.default_rng(seed)
    w = np.zeros(d)
    acc = np.zeros(d)
    history = []
    t = 0
    for _ in range(epochs):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (lam * t)
            violated = ys[i] * np.dot(w, Xa[i]) < 1.0
            w *= 1.0 - eta * lam
            if violated:
                w += (eta * sw_scaled[i] * ys[i]) * Xa[i]
            norm = np.sqrt(np.dot(w, w))
            if norm > radius:
                w *= radius / norm
            acc += w
        history.append(primal_objective(acc / t, Xa, ys, lam, sw))
    return acc / t, history


def fit(X: np.ndarray, y: np.ndarray, hp: dict, seed: int, sample_weight: np.ndarray | None = None) -> dict:
    w, _ = pegasos(X, y, hp["lam"], int(hp["epochs"]), seed, sample_weight)
    return {"weights": w[:-1].copy(), "bias": float(w[-1])}


def margin(params: dict, X: np.ndarray) -> np.ndarray:
    return X @ params["weights"] + params["bias"]


def score(params: dict, X: np.ndarray) -> np.ndarray:
    return sigmoid(margin(params, X))
