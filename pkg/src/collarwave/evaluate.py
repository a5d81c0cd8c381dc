"""Per-group and pooled cross-validated report tables."""

from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .features import Dataset
from .metrics import MetricsReport, metrics
from .models import TrainConfig, cross_validate, leave_one_out, task_labels

REPORT_COLUMNS = ["group", "model", "precision", "recall", "f1", "support", "accuracy", "flags"]
AVERAGE = "average"
POOLED = "all"


@dataclass(frozen=True)
class ReportRow:
    group: str
    model: str
    precision: float
    recall: float
    f1: float
    support: int | None
    accuracy: float
    flags: tuple[str, ...] = ()

    @classmethod
    def from_metrics(cls, group: str, model: str, m: MetricsReport, flags=()) -> ReportRow:
        return cls(group, model, m.precision, m.recall, m.f1, m.support, m.accuracy, tuple(m.flags) + tuple(flags))


def _cv(ds: Dataset, cfg: TrainConfig, k: int):
    counts = Counter(task_labels(ds.labels, cfg).tolist())
    if min(counts.values()) < k:
        return leave_one_out(ds, cfg)
    return cross_validate(ds, cfg, k)


def average_row(rows: Sequence[ReportRow]) -> ReportRow:
    """Unweighted mean of the metric columns; support is left blank."""
    return ReportRow(
        AVERAGE,
        rows[0].model,
        float(np.mean([r.precision for r in rows])),
        float(np.mean([r.recall for r in rows])),
        float(np.mean([r.f1 for r in rows])),
        None,
        float(np.mean([r.accuracy for r in rows])),
    )


def per_group_report(ds: Dataset, cfg: TrainConfig, k: int = 10) -> list[ReportRow]:
    """Within-group CV for every group, then an unweighted average row.

    Groups whose smallest class has fewer than ``k`` rows fall back to
    leave-one-out, flagged as such.
    """
    groups = list(dict.fromkeys(ds.groups.tolist()))
    if not groups:
        raise ValueError("dataset has no groups")
    rows = []
    for g in groups:
        rep = _cv(ds.subset(ds.groups == g), cfg, k)
        rows.append(ReportRow.from_metrics(str(g), cfg.model_kind, metrics(rep.confusion), rep.flags))
    return rows + [average_row(rows)]


def pooled_report(ds: Dataset, kinds: Sequence[str], cfg: TrainConfig, k: int = 10) -> list[ReportRow]:
    if len(ds) == 0:
        raise ValueError("empty dataset")
    rows = []
    for kind in kinds:
        kcfg = replace(cfg, model_kind=kind, hyperparameters={})
        rep = _cv(ds, kcfg, k)
        rows.append(ReportRow.from_metrics(POOLED, kcfg.model_kind, metrics(rep.confusion), rep.flags))
    return rows


def majority_baseline(truths: Sequence[str]) -> list[str]:
    """Predict the most frequent class everywhere (ties: first in sorted order)."""
    counts = Counter(truths)
    top = max(sorted(counts), key=lambda c: counts[c])
    return [top] * len(truths)


# ---------------------------------------------------------------------------
# rendering


def _num(v: float) -> str:
    return repr(float(v))


def to_csv(rows: Sequence[ReportRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REPORT_COLUMNS)
    for r in rows:
        w.writerow([r.group, r.model, _num(r.precision), _num(r.recall), _num(r.f1),
                    "" if r.support is None else r.support, _num(r.accuracy), ";".join(r.flags)])
    return buf.getvalue()


def to_text(rows: Sequence[ReportRow]) -> str:
    header = ["Group", "Model", "Precision", "Recall", "F1 Score", "Support", "Accuracy", "Flags"]
    body = [
        [r.group, r.model, f"{r.precision:.2f}", f"{r.recall:.2f}", f"{r.f1:.2f}",
         "" if r.support is None else str(r.support), f"{r.accuracy:.2f}", ",".join(r.flags)]
        for r in rows
    ]
    widths = [max(len(row[i]) for row in [header, *body]) for i in range(len(header))]
    lines = ["  ".join(c.ljust(wd) if i < 2 else c.rjust(wd) for i, (c, wd) in enumerate(zip(row, widths))).rstrip()
             for row in [header, *body]]
    lines.insert(1, "-" * len(lines[0]))
    return "\n".join(lines) + "\n"


def plot_recall(rows: Sequence[ReportRow], path) -> None:
    """Bar chart of recall per row, written as SVG."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "collarwave"}):
        fig, ax = plt.subplots(figsize=(6, 3.5))
        labels = [r.model if r.group == POOLED else r.group for r in rows]
        ax.bar(range(len(rows)), [r.recall for r in rows], color="#4c72b0")
        ax.set_xticks(range(len(rows)))
        ax.set_xticklabels(labels, rotation=30, ha="right")
        ax.set_ylim(0, 1.05)
        ax.set_ylabel("recall")
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
