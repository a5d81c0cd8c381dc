"""Binary confusion counts and the precision / recall / F1 / accuracy report."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import Empty, LengthMismatch
from .preprocess import SPIN


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def __add__(self, other: ConfusionMatrix) -> ConfusionMatrix:
        return ConfusionMatrix(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn, self.tn + other.tn)


@dataclass(frozen=True)
class MetricsReport:
    precision: float
    recall: float
    f1: float
    accuracy: float
    support: int
    flags: tuple[str, ...] = ()


def confusion(predictions: Sequence, truths: Sequence, positive: str = SPIN) -> ConfusionMatrix:
    """Anything other than ``positive`` counts as the negative class."""
    if len(predictions) != len(truths):
        raise LengthMismatch(f"{len(predictions)} predictions vs {len(truths)} truths")
    if len(truths) == 0:
        raise Empty("no predictions to score")
    tp = fp = fn = tn = 0
    for p, t in zip(predictions, truths):
        p, t = p == positive, t == positive
        if p and t:
            tp += 1
        elif p:
            fp += 1
        elif t:
            fn += 1
        else:
            tn += 1
    return ConfusionMatrix(tp, fp, fn, tn)


def _ratio(num: float, den: float, zero_division: float, flag: str, flags: list[str]) -> float:
    if den == 0:
        flags.append(flag)
        return zero_division
    return num / den


def metrics(cm: ConfusionMatrix, zero_division: float = 0.0) -> MetricsReport:
    """Undefined ratios take ``zero_division`` and are named in ``flags``."""
    if cm.total <= 0:
        raise Empty("empty confusion matrix")
    flags: list[str] = []
    precision = _ratio(cm.tp, cm.tp + cm.fp, zero_division, "precision_zero_division", flags)
    recall = _ratio(cm.tp, cm.tp + cm.fn, zero_division, "recall_zero_division", flags)
    f1 = _ratio(2 * precision * recall, precision + recall, zero_division, "f1_zero_division", flags)
    return MetricsReport(precision, recall, f1, (cm.tp + cm.tn) / cm.total, cm.tp + cm.fn, tuple(flags))


def f1_score(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)
