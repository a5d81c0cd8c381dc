"""Gaussian naive Bayes for a 0/1 target."""

from __future__ import annotations

import numpy as np

DEFAULTS = {"var_smoothing": 1e-9}


def fit(X: np.ndarray, y: np.ndarray, hp: dict, seed: int, balanced: bool = False) -> dict:
    eps = hp["var_smoothing"] * float(np.max(X.var(axis=0)))
    if eps <= 0:
        eps = hp["var_smoothing"]
    means, variances, priors = [], [], []
    for c in (0, 1):
        Xc = X[y == c]
        means.append(Xc.mean(axis=0))
        variances.append(Xc.var(axis=0) + eps)
        priors.append(0.5 if balanced else len(Xc) / len(X))
    return {
        "means": np.array(means),
        "variances": np.array(variances),
        "log_priors": np.log(np.array(priors)),
    }


def joint_log_likelihood(params: dict, X: np.ndarray) -> np.ndarray:
    """(n, 2) array of log p(x, class)."""
    mu, var = params["means"], params["variances"]
    out = np.empty((len(X), 2))
    for c in (0, 1):
        d = X - mu[c]
        out[:, c] = params["log_priors"][c] - 0.5 * np.sum(np.log(2 * np.pi * var[c]) + d * d / var[c], axis=1)
    return out


def posteriors(params: dict, X: np.ndarray) -> np.ndarray:
    jll = joint_log_likelihood(params, X)
    jll -= jll.max(axis=1, keepdims=True)
    p = np.exp(jll)
    return p / p.sum(axis=1, keepdims=True)


def score(params: dict, X: np.ndarray) -> np.ndarray:
    return posteriors(params, X)[:, 1]
