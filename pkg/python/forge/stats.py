"""
Small statistical estimators used by supervised pooling.
"""

from typing import Sequence

import numpy as np
from scipy.special import entr, erfc
from sklearn.metrics import mutual_info_score

from forge.exceptions import DomainError, LengthMismatchError

_LN2 = np.log(2.0)


def entropy(p: float) -> float:
    """Binary entropy in bits, with 0 * log(0) taken as 0."""
    if not 0.0 <= p <= 1.0 or np.isnan(p):
        raise DomainError(f"probability {p} outside [0, 1]")
    return float((entr(p) + entr(1.0 - p)) / _LN2)


def _joint_entropy(counts: np.ndarray, n: int) -> np.ndarray:
    # counts: (..., 4) cell counts of a 2x2 table
    return entr(counts / n).sum(axis=-1) / _LN2


def mutual_information_columns(c: np.ndarray, X: np.ndarray) -> np.ndarray:
    """
    Plug-in mutual information (bits) between a binary vector ``c`` of length n
    and every column of the binary (n, m) matrix ``X``.
    """
    c = np.asarray(c, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != c.shape[0]:
        raise LengthMismatchError("label and feature lengths differ", {"labels": len(c), "rows": X.shape[0]})
    n = c.shape[0]
    if n == 0:
        raise LengthMismatchError("empty sample")
    n11 = c @ X
    n01 = X.sum(axis=0) - n11
    n10 = c.sum() - n11
    n00 = n - n11 - n01 - n10
    joint = _joint_entropy(np.stack([n00, n01, n10, n11], axis=-1), n)
    p_c = c.mean()
    p_x = X.mean(axis=0)
    h_c = (entr(p_c) + entr(1.0 - p_c)) / _LN2
    h_x = (entr(p_x) + entr(1.0 - p_x)) / _LN2
    return np.maximum(h_c + h_x - joint, 0.0)


def mutual_information(c_sample: Sequence[int], g_sample: Sequence[int]) -> float:
    if len(c_sample) != len(g_sample):
        raise LengthMismatchError(
            "samples differ in length", {"c": len(c_sample), "g": len(g_sample)}
        )
    if len(c_sample) == 0:
        raise LengthMismatchError("empty sample")
    return float(mutual_info_score(np.asarray(c_sample), np.asarray(g_sample)) / _LN2)


def chi2_pvalues_columns(c: np.ndarray, X: np.ndarray) -> np.ndarray:
    """Pearson chi-square (1 dof, no continuity correction) p-value per column of ``X``."""
    c = np.asarray(c, dtype=np.float64)
    X = np.asarray(X, dtype=np.float64)
    n = float(c.shape[0])
    a = c @ X
    b = c.sum() - a
    col = X.sum(axis=0)
    cc = col - a
    d = n - a - b - cc
    return _chi2_from_cells(a, b, cc, d)


def _chi2_from_cells(a, b, c, d) -> np.ndarray:
    a, b, c, d = (np.asarray(v, dtype=np.float64) for v in (a, b, c, d))
    n = a + b + c + d
    margins = (a + b) * (c + d) * (a + c) * (b + d)
    with np.errstate(divide="ignore", invalid="ignore"):
        statistic = np.where(margins > 0, n * (a * d - b * c) ** 2 / margins, 0.0)
    return np.where(margins > 0, erfc(np.sqrt(statistic / 2.0)), 1.0)


def chi2_statistic(table: Sequence[Sequence[int]]) -> float:
    (a, b), (c, d) = table
    n = a + b + c + d
    margins = (a + b) * (c + d) * (a + c) * (b + d)
    return 0.0 if margins == 0 else n * (a * d - b * c) ** 2 / margins


def chi2_pvalue(table: Sequence[Sequence[int]]) -> float:
    """p-value of a 2x2 contingency table; a zero row or column gives 1."""
    (a, b), (c, d) = table
    if min(a, b, c, d) < 0 or a + b + c + d < 1:
        raise DomainError("contingency table needs non-negative counts and at least one observation")
    return float(_chi2_from_cells(a, b, c, d))


def binarize_labels(labels: Sequence[float]) -> np.ndarray:
    """1 for labels strictly above the median, 0 otherwise."""
    values = np.asarray(labels, dtype=np.float64)
    if values.size == 0:
        raise DomainError("cannot binarize an empty label list")
    return (values > np.median(values)).astype(np.int8)


def is_binary(labels: Sequence[float]) -> bool:
    return bool(np.isin(np.asarray(labels), (0, 1)).all())
