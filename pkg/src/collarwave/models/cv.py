"""Stratified k-fold and leave-one-out cross-validation.

The normalizer is refit on each training portion, so held-out rows never
influence the statistics they are scaled with.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from ..errors import ClassSmallerThanK
from ..features import Dataset, NormalizationStats, apply_normalizer, fit_normalizer
from ..metrics import ConfusionMatrix, confusion
from . import TrainConfig, predict_many, task_labels, train


@dataclass
class CVReport:
    kind: str
    k: int
    seed: int
    folds: list[np.ndarray]  # held-out row indices per fold
    predictions: np.ndarray
    scores: np.ndarray
    truths: np.ndarray
    confusion: ConfusionMatrix
    fold_stats: list[NormalizationStats] = field(repr=False)
    flags: tuple[str, ...] = ()

    def as_dict(self) -> dict:
        cm = self.confusion
        return {
            "kind": self.kind,
            "k": self.k,
            "seed": self.seed,
            "confusion": {"tp": cm.tp, "fp": cm.fp, "fn": cm.fn, "tn": cm.tn},
            "fold_sizes": [len(f) for f in self.folds],
            "flags": list(self.flags),
        }


def stratified_folds(labels, k: int, seed: int) -> list[np.ndarray]:
    """Deal each class's rows, shuffled by ``seed``, round-robin into ``k`` folds.

    Classes are processed in sorted order from a single generator, so the
    partition is a pure function of (labels, k, seed).
    """
    labels = np.asarray(labels, dtype=object)
    counts = Counter(labels.tolist())
    small = {c: n for c, n in counts.items() if n < k}
    if small:
        raise ClassSmallerThanK(f"classes smaller than k={k}: {small}")
    rng = np.random.default_rng(seed)
    buckets: list[list[int]] = [[] for _ in range(k)]
    for cls in sorted(counts):
        members = rng.permutation(np.flatnonzero(labels == cls))
        for j, row in enumerate(members):
            buckets[j % k].append(int(row))
    return [np.array(sorted(b), dtype=np.int64) for b in buckets]


def run_folds(ds: Dataset, cfg: TrainConfig, folds: list[np.ndarray], k: int, seed: int,
              flags: tuple[str, ...] = ()) -> CVReport:
    truths = task_labels(ds.labels, cfg)
    preds = np.empty(len(ds), dtype=object)
    scores = np.empty(len(ds))
    stats_per_fold = []
    for held in folds:
        mask = np.ones(len(ds), dtype=bool)
        mask[held] = False
        train_ds, test_ds = ds.subset(mask), ds.subset(held)
        stats = fit_normalizer(train_ds)
        stats_per_fold.append(stats)
        model = train(apply_normalizer(train_ds, stats), cfg, stats)
        out = predict_many(model, apply_normalizer(test_ds, stats).X)
        preds[held] = [p.label for p in out]
        scores[held] = [p.score for p in out]
    cm = confusion(list(preds), list(truths), cfg.positive_label)
    return CVReport(cfg.model_kind, k, seed, folds, preds, scores, truths, cm, stats_per_fold, flags)


def cross_validate(ds: Dataset, cfg: TrainConfig, k: int = 10, seed: int | None = None) -> CVReport:
    seed = cfg.seed if seed is None else seed
    folds = stratified_folds(task_labels(ds.labels, cfg), k, seed)
    return run_folds(ds, cfg, folds, k, seed)


def leave_one_out(ds: Dataset, cfg: TrainConfig) -> CVReport:
    folds = [np.array([i], dtype=np.int64) for i in range(len(ds))]
    return run_folds(ds, cfg, folds, len(ds), cfg.seed, ("leave_one_out",))
