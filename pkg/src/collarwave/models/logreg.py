"""L2-regularised logistic regression by full-batch gradient descent.

Objective, with per-row weights s and z = Xw + b::

    sum_i s_i * (log(1 + e^z_i) - y_i z_i) / sum_i s_i  +  lam/2 * |w|^2

The intercept is not penalised.
"""

from __future__ import annotations

import numpy as np

DEFAULTS = {"lam": 1e-3, "learning_rate": 0.1, "iterations": 500}


def sigmoid(z):
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def objective(theta: np.ndarray, X: np.ndarray, y: np.ndarray, lam: float, sw: np.ndarray | None = None):
    """Loss and gradient at ``theta = [w..., b]``."""
    w, b = theta[:-1], theta[-1]
    sw = np.ones(len(X)) if sw is None else sw
    total = sw.sum()
    z = X @ w + b
    loss = np.dot(sw, np.logaddexp(0.0, z) - y * z) / total + 0.5 * lam * np.dot(w, w)
    r = sw * (sigmoid(z) - y) / total
    grad = np.empty_like(theta)
    grad[:-1] = X.T @ r + lam * w
    grad[-1] = r.sum()
    return float(loss), grad


def fit(X: np.ndarray, y: np.ndarray, hp: dict, seed: int, sample_weight: np.ndarray | None = None) -> dict:
    theta = np.zeros(X.shape[1] + 1)
    y = y.astype(np.float64)
    for _ in range(int(hp["iterations"])):
        _, g = objective(theta, X, y, hp["lam"], sample_weight)
        theta -= hp["learning_rate"] * g
    return {"weights": theta[:-1].copy(), "bias": float(theta[-1])}


def score(params: dict, X: np.ndarray) -> np.ndarray:
    return sigmoid(X @ params["weights"] + params["bias"])
