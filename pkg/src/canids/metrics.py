"""Confusion matrices and the per-class detection metrics.

Rows are the actual class, columns the predicted class. A ratio whose
denominator is zero is reported as ``None`` and skipped when averaging.
"""
import statistics
from dataclasses import dataclass, fields
from typing import Optional, Sequence

import numpy as np

from . import kernels

METRIC_NAMES = ("dr", "fpr", "accuracy", "precision", "f1")
METRIC_TITLES = {"dr": "DR", "fpr": "FPR", "accuracy": "Accuracy", "precision": "Precision", "f1": "F1-score"}


class MetricsError(ValueError):
    pass


class LengthMismatch(MetricsError):
    pass


class LabelOutOfRange(MetricsError):
    pass


class ZeroMean(MetricsError):
    pass


@dataclass(frozen=True)
class ConfusionMatrix:
    counts: np.ndarray

    def __post_init__(self):
        counts = np.array(self.counts, dtype=np.int64)
        if counts.ndim != 2 or counts.shape[0] != counts.shape[1] or (counts < 0).any():
            raise MetricsError("confusion counts must be a square nonnegative matrix")
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)

    @property
    def num_classes(self) -> int:
        return self.counts.shape[0]

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def overall_accuracy(self) -> Optional[float]:
        t = self.total
        return float(np.trace(self.counts)) / t if t else None

    def __add__(self, other):
        return ConfusionMatrix(self.counts + other.counts)


def confusion(actual, predicted, num_classes: int) -> ConfusionMatrix:
    actual = np.asarray(actual, dtype=np.int64).ravel()
    predicted = np.asarray(predicted, dtype=np.int64).ravel()
    if actual.shape != predicted.shape:
        raise LengthMismatch(f"{actual.size} actual labels vs {predicted.size} predictions")
    for seq in (actual, predicted):
        if seq.size and (seq.min() < 0 or seq.max() >= num_classes):
            raise LabelOutOfRange(f"labels must lie in [0, {num_classes})")
    return ConfusionMatrix(kernels.confusion_counts(actual, predicted, num_classes))


def tp_tn_fp_fn(m: ConfusionMatrix, k: int):
    if not 0 <= k < m.num_classes:
        raise IndexError(f"class {k} out of range for {m.num_classes} classes")
    c = m.counts
    tp = int(c[k, k])
    fn = int(c[k, :].sum()) - tp
    fp = int(c[:, k].sum()) - tp
    tn = m.total - tp - fn - fp
    return tp, tn, fp, fn


def _ratio(num, den):
    return num / den if den else None


@dataclass(frozen=True)
class PerClassMetrics:
    dr: Optional[float]
    fpr: Optional[float]
    accuracy: Optional[float]
    precision: Optional[float]
    f1: Optional[float]

    def as_dict(self):
        return {f.name: getattr(self, f.name) for f in fields(self)}


def per_class(m: ConfusionMatrix, k: int) -> PerClassMetrics:
    tp, tn, fp, fn = tp_tn_fp_fn(m, k)
    return PerClassMetrics(
        dr=_ratio(tp, tp + fn),
        fpr=_ratio(fp, tn + fp),
        accuracy=_ratio(tp + tn, tp + tn + fp + fn),
        precision=_ratio(tp, tp + fp),
        f1=_ratio(2 * tp, 2 * tp + fp + fn),
    )


def all_classes(m: ConfusionMatrix) -> list:
    return [per_class(m, k) for k in range(m.num_classes)]


def macro_average(metrics: Sequence[PerClassMetrics]) -> PerClassMetrics:
    if not metrics:
        raise MetricsError("nothing to average")
    out = {}
    for name in METRIC_NAMES:
        vals = [getattr(mc, name) for mc in metrics if getattr(mc, name) is not None]
        out[name] = float(statistics.mean(vals)) if vals else None
    return PerClassMetrics(**out)


def coefficient_of_variation(scores) -> float:
    """Population std / mean, in percent."""
    scores = [float(s) for s in scores]
    if not scores:
        raise MetricsError("no scores")
    # statistics.mean/pstdev are exact, so a constant sequence gives exactly 0
    mean = statistics.mean(scores)
    if mean == 0:
        raise ZeroMean("coefficient of variation is undefined for a zero mean")
    return statistics.pstdev(scores) / mean * 100.0


@dataclass(frozen=True)
class CvEntry:
    mean: float
    std: float
    cv_percent: Optional[float]


def cv_report(fold_scores: dict) -> dict:
    """``{name: [score per fold]}`` -> ``{name: CvEntry}``; folds with an undefined score are skipped."""
    report = {}
    for name, scores in fold_scores.items():
        vals = [float(s) for s in scores if s is not None]
        if not vals:
            report[name] = CvEntry(float("nan"), float("nan"), None)
            continue
        mean = statistics.mean(vals)
        std = statistics.pstdev(vals)
        report[name] = CvEntry(mean, std, std / mean * 100.0 if mean != 0 else None)
    return report


def _fmt(v, digits=6):
    return "n/a" if v is None else f"{v:.{digits}f}"


def format_table(class_names, metrics: Sequence[PerClassMetrics], fmt: str = "text") -> str:
    """One row per class plus an unweighted ``Average`` row."""
    rows = list(zip(class_names, metrics)) + [("Average", macro_average(metrics))]
    header = ["Attack Type"] + [METRIC_TITLES[n] for n in METRIC_NAMES]
    if fmt == "csv":
        lines = [",".join(header)]
        for name, mc in rows:
            lines.append(",".join([name] + ["" if v is None else repr(float(v)) for v in mc.as_dict().values()]))
        return "\n".join(lines) + "\n"
    width = max(len(header[0]), max(len(n) for n, _ in rows))
    lines = [f"{header[0]:<{width}}  " + "  ".join(f"{h:>10}" for h in header[1:])]
    for name, mc in rows:
        lines.append(f"{name:<{width}}  " + "  ".join(f"{_fmt(v):>10}" for v in mc.as_dict().values()))
    return "\n".join(lines) + "\n"


def format_confusion(m: ConfusionMatrix, class_names) -> str:
    width = max(8, max(len(n) for n in class_names))
    lines = [" " * width + "  " + "  ".join(f"{n[:10]:>10}" for n in class_names)]
    for name, row in zip(class_names, m.counts):
        lines.append(f"{name:<{width}}  " + "  ".join(f"{v:>10d}" for v in row))
    return "\n".join(lines) + "\n"
