"""
Evaluation metrics.

Undefined values (a precision with no predictions of the class, a
sensitivity for an absent class, an accuracy over nothing) are returned as
``None`` rather than NaN. MCC falls back to 0 whenever its normaliser vanishes.
"""

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from sklearn.metrics import average_precision_score, matthews_corrcoef, roc_auc_score

from forge.exceptions import LengthMismatchError, NoPositivesError, SingleClassError


def _check_lengths(a: Sequence, b: Sequence, allow_empty: bool = False) -> None:
    if len(a) != len(b):
        raise LengthMismatchError("inputs differ in length", {"left": len(a), "right": len(b)})
    if not allow_empty and len(a) == 0:
        raise LengthMismatchError("inputs are empty")


@dataclass(frozen=True)
class BinaryCounts:
    tp: int = 0
    tn: int = 0
    fp: int = 0
    fn: int = 0

    @classmethod
    def from_labels(cls, truth: Sequence[bool], pred: Sequence[bool]) -> "BinaryCounts":
        _check_lengths(truth, pred, allow_empty=True)
        t = np.asarray(truth, dtype=bool)
        p = np.asarray(pred, dtype=bool)
        return cls(
            tp=int(np.sum(t & p)),
            tn=int(np.sum(~t & ~p)),
            fp=int(np.sum(~t & p)),
            fn=int(np.sum(t & ~p)),
        )

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    def to_confusion(self, n_classes: int = 2) -> "ConfusionCounts":
        "Positive class first; extra classes stay empty."
        matrix = np.zeros((n_classes, n_classes), dtype=np.int64)
        matrix[0, 0], matrix[0, 1] = self.tp, self.fn
        matrix[1, 0], matrix[1, 1] = self.fp, self.tn
        return ConfusionCounts(matrix)


class ConfusionCounts:
    """Square count matrix; rows are true classes, columns predicted classes."""

    def __init__(self, matrix: np.ndarray) -> None:
        matrix = np.asarray(matrix, dtype=np.int64)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1] or np.any(matrix < 0):
            raise ValueError("confusion matrix must be square with non-negative counts")
        self.matrix = matrix

    @classmethod
    def from_labels(cls, truth: Sequence[int], pred: Sequence[int], n_classes: int = 3) -> "ConfusionCounts":
        _check_lengths(truth, pred, allow_empty=True)
        matrix = np.zeros((n_classes, n_classes), dtype=np.int64)
        np.add.at(matrix, (np.asarray(truth, dtype=int), np.asarray(pred, dtype=int)), 1)
        return cls(matrix)

    @property
    def n_classes(self) -> int:
        return self.matrix.shape[0]

    @property
    def total(self) -> int:
        return int(self.matrix.sum())

    def true_count(self, label: int) -> int:
        return int(self.matrix[label].sum())

    def predicted_count(self, label: int) -> int:
        return int(self.matrix[:, label].sum())

    def correct(self, label: int) -> int:
        return int(self.matrix[label, label])

    def __repr__(self) -> str:
        return f"ConfusionCounts({self.matrix.tolist()})"


def mae(pred: Sequence[float], truth: Sequence[float]) -> float:
    _check_lengths(pred, truth)
    return float(np.mean(np.abs(np.asarray(pred, dtype=float) - np.asarray(truth, dtype=float))))


def accuracy(pred: Sequence[int], truth: Sequence[int]) -> Optional[float]:
    _check_lengths(pred, truth, allow_empty=True)
    if len(pred) == 0:
        return None
    return float(np.mean(np.asarray(pred) == np.asarray(truth)))


def mcc_binary(c: BinaryCounts) -> float:
    factors = (c.tp + c.fp, c.tp + c.fn, c.tn + c.fp, c.tn + c.fn)
    if any(f == 0 for f in factors):
        return 0.0
    numerator = c.tp * c.tn - c.fp * c.fn
    return float(numerator / math.sqrt(math.prod(float(f) for f in factors)))


def mcc_multiclass(c: ConfusionCounts) -> float:
    if c.total == 0:
        return 0.0
    truth, pred = np.nonzero(c.matrix)
    return float(matthews_corrcoef(truth, pred, sample_weight=c.matrix[truth, pred]))


def sensitivity(c: ConfusionCounts, label: int) -> Optional[float]:
    n = c.true_count(label)
    return None if n == 0 else c.correct(label) / n


def precision(c: ConfusionCounts, label: int) -> Optional[float]:
    p = c.predicted_count(label)
    return None if p == 0 else c.correct(label) / p


def _binary_inputs(scores: Sequence[float], labels: Sequence[int]):
    _check_lengths(scores, labels)
    s = np.asarray(scores, dtype=float)
    y = np.asarray(labels).astype(bool)
    return s, y


def auroc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Normalised Mann-Whitney U; tied scores earn half credit."""
    s, y = _binary_inputs(scores, labels)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClassError("AUROC needs both classes", {"positives": n_pos, "negatives": n_neg})
    return float(roc_auc_score(y, s))


def auprc(scores: Sequence[float], labels: Sequence[int]) -> float:
    """Step-wise average precision; tied scores form one threshold."""
    s, y = _binary_inputs(scores, labels)
    n_pos = int(y.sum())
    if n_pos == 0:
        raise NoPositivesError("AUPRC needs at least one positive")
    if n_pos == len(y):
        return 1.0
    return float(average_precision_score(y, s))
