"""Confusion matrices and the evaluation metric suite.

Per-class accuracy is one-vs-rest accuracy, (TP + TN) / total; that keeps it
distinct from recall. A per-class F1 whose denominator vanishes (class absent
from both gold and predictions) is reported as 0 and flagged undefined so
macro averages stay stable on degenerate folds.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class ConfusionMatrix:
    """Rows are gold classes, columns are predicted classes."""

    counts: np.ndarray

    def __post_init__(self) -> None:
        counts = np.asarray(self.counts)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise ValueError("confusion matrix must be square")
        if np.any(counts < 0):
            raise ValueError("counts must be non-negative")
        object.__setattr__(self, "counts", counts.astype(np.int64))

    @property
    def num_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def correct(self) -> int:
        return int(np.trace(self.counts))

    @property
    def misclassified(self) -> int:
        return self.total - self.correct


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    ovr_accuracy: float
    support: int
    f1_undefined: bool = False


@dataclass(frozen=True)
class MetricsReport:
    accuracy: float
    macro_f1: float
    micro_f1: float
    weighted_f1: float
    per_class: tuple[ClassMetrics, ...]


def confusion(gold: Sequence[int], predicted: Sequence[int], num_classes: int) -> ConfusionMatrix:
    gold = np.asarray(gold, dtype=int)
    predicted = np.asarray(predicted, dtype=int)
    if gold.shape != predicted.shape:
        raise ValueError("gold and predicted labels must have equal length")
    counts = np.zeros((num_classes, num_classes), dtype=np.int64)
    for g, p in zip(gold, predicted):
        if not (0 <= g < num_classes and 0 <= p < num_classes):
            raise ValueError(f"label pair ({g}, {p}) out of range for {num_classes} classes")
        counts[g, p] += 1
    return ConfusionMatrix(counts)


def metrics(matrix: ConfusionMatrix) -> MetricsReport:
    counts = matrix.counts
    total = matrix.total
    if total == 0:
        raise ValueError("cannot compute metrics of an empty confusion matrix")

    per_class = []
    tp_sum = fp_sum = fn_sum = 0
    for j in range(matrix.num_classes):
        tp = int(counts[j, j])
        fp = int(counts[:, j].sum()) - tp
        fn = int(counts[j, :].sum()) - tp
        tn = total - tp - fp - fn
        tp_sum += tp
        fp_sum += fp
        fn_sum += fn
        precision = tp / (tp + fp) if tp + fp > 0 else 0.0
        recall = tp / (tp + fn) if tp + fn > 0 else 0.0
        undefined = (2 * tp + fp + fn) == 0
        f1 = 0.0 if undefined else 2 * tp / (2 * tp + fp + fn)
        per_class.append(
            ClassMetrics(
                precision=precision,
                recall=recall,
                f1=f1,
                ovr_accuracy=(tp + tn) / total,
                support=tp + fn,
                f1_undefined=undefined,
            )
        )

    accuracy = matrix.correct / total
    micro_f1 = 2 * tp_sum / (2 * tp_sum + fp_sum + fn_sum)
    macro_f1 = float(np.mean([c.f1 for c in per_class]))
    weighted_f1 = float(sum(c.f1 * c.support for c in per_class) / total)
    return MetricsReport(
        accuracy=accuracy,
        macro_f1=macro_f1,
        micro_f1=micro_f1,
        weighted_f1=weighted_f1,
        per_class=tuple(per_class),
    )


def metrics_to_dict(report: MetricsReport, class_names: Sequence[str] | None = None) -> dict:
    names = class_names or [str(i) for i in range(len(report.per_class))]
    return {
        "accuracy": report.accuracy,
        "macro_f1": report.macro_f1,
        "micro_f1": report.micro_f1,
        "weighted_f1": report.weighted_f1,
        "per_class": {
            names[i]: {
                "precision": c.precision,
                "recall": c.recall,
                "f1": c.f1,
                "f1_undefined": c.f1_undefined,
                "ovr_accuracy": c.ovr_accuracy,
                "support": c.support,
            }
            for i, c in enumerate(report.per_class)
        },
    }


def format_metrics_text(report: MetricsReport, class_names: Sequence[str] | None = None) -> str:
    """Aligned-column summary for terminals and log files."""
    names = list(class_names or [str(i) for i in range(len(report.per_class))])
    width = max(len(n) for n in names + ["class"])
    lines = [
        f"accuracy={report.accuracy:.4f}  macro_f1={report.macro_f1:.4f}  "
        f"micro_f1={report.micro_f1:.4f}  weighted_f1={report.weighted_f1:.4f}",
        f"{'class':<{width}}  precision  recall  f1      ovr_acc  support",
    ]
    for name, c in zip(names, report.per_class):
        flag = "*" if c.f1_undefined else " "
        lines.append(
            f"{name:<{width}}  {c.precision:9.4f}  {c.recall:6.4f}  {c.f1:6.4f}{flag} "
            f"{c.ovr_accuracy:7.4f}  {c.support:7d}"
        )
    return "\n".join(lines)
