"""Confusion matrix and the four skew-insensitive multi-class metrics.

AvAcc   mean over classes of one-vs-rest accuracy (tp + tn) / total
MAvG    geometric mean of per-class recall
AvFb    mean over classes of F-beta
CBA     mean over classes of mat[i, i] / max(row_i, col_i)

Any per-class ratio whose denominator is zero counts as 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ConfusionMatrix:
    """``counts[i, j]``: instances of true class i predicted as class j."""

    counts: np.ndarray
    labels: tuple[int, ...]

    @property
    def n_classes(self) -> int:
        return len(self.labels)

    @property
    def total(self) -> int:
        return int(self.counts.sum())


@dataclass(frozen=True)
class ClassScores:
    precision: float
    recall: float
    f_beta: float
    accuracy: float


@dataclass(frozen=True)
class MetricReport:
    av_acc: float
    m_avg: float
    av_fb: float
    cba: float
    per_class: tuple[ClassScores, ...]
    beta: float = 1.0

    def as_dict(self) -> dict[str, float]:
        return {"AvAcc": self.av_acc, "MAvG": self.m_avg,
                "AvFb": self.av_fb, "CBA": self.cba}


def confusion(true_labels, predicted_labels, n_classes: int | None = None) -> ConfusionMatrix:
    t = np.asarray(true_labels, dtype=np.int64)
    p = np.asarray(predicted_labels, dtype=np.int64)
    if t.shape != p.shape:
        raise ValueError(f"length mismatch: {len(t)} true vs {len(p)} predicted")
    if n_classes is None:
        n_classes = int(max(t.max(initial=-1), p.max(initial=-1))) + 1
    if len(t) and (min(t.min(), p.min()) < 0 or max(t.max(), p.max()) >= n_classes):
        raise ValueError(f"label outside 0..{n_classes - 1}")
    counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(counts, (t, p), 1)
    return ConfusionMatrix(counts, tuple(range(n_classes)))


def _ratio(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    num = np.asarray(num, dtype=np.float64)
    den = np.asarray(den, dtype=np.float64)
    out = np.zeros_like(num)
    np.divide(num, den, out=out, where=den > 0)
    return out


def evaluate(cm: ConfusionMatrix | np.ndarray, beta: float = 1.0) -> MetricReport:
    mat = np.asarray(cm.counts if isinstance(cm, ConfusionMatrix) else cm, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] != mat.shape[1] or mat.size == 0:
        raise ValueError("confusion matrix must be square and non-empty")
    total = mat.sum()
    if total <= 0:
        raise ValueError("confusion matrix is empty")
    tp = np.diag(mat)
    row = mat.sum(axis=1)
    col = mat.sum(axis=0)
    fn = row - tp
    fp = col - tp
    tn = total - tp - fn - fp

    recall = _ratio(tp, tp + fn)
    precision = _ratio(tp, tp + fp)
    b2 = beta * beta
    f_beta = _ratio((1 + b2) * precision * recall, b2 * precision + recall)
    accuracy = (tp + tn) / total

    m_avg = 0.0 if np.any(recall == 0) else float(np.exp(np.log(recall).mean()))
    cba = float(_ratio(tp, np.maximum(row, col)).mean())
    per_class = tuple(ClassScores(float(p), float(r), float(f), float(a))
                      for p, r, f, a in zip(precision, recall, f_beta, accuracy))
    return MetricReport(float(accuracy.mean()), m_avg, float(f_beta.mean()), cba,
                        per_class, beta)
