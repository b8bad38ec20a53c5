"""Confusion matrices and the Matthews correlation coefficient."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Metrics:
    confusion: np.ndarray  # rows = true, cols = predicted
    mcc: float
    accuracy: float

    def to_dict(self) -> dict:
        return {"confusion": self.confusion.tolist(), "mcc": self.mcc, "accuracy": self.accuracy}


def confusion_matrix(predictions, labels, K: int) -> np.ndarray:
    predictions = np.asarray(predictions, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if len(labels) and (labels.min() < 0 or labels.max() >= K):
        raise ValueError(f"labels outside [0, {K})")
    if len(predictions) and (predictions.min() < 0 or predictions.max() >= K):
        raise ValueError(f"predictions outside [0, {K})")
    return np.bincount(labels * K + predictions, minlength=K * K).reshape(K, K)


def binary_mcc(tp, tn, fp, fn) -> float:
    """(TP*TN - FP*FN) / sqrt((TP+FP)(TP+FN)(TN+FP)(TN+FN)); 0 when the denominator vanishes."""
    den = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn)
    if den == 0:
        return 0.0
    return (tp * tn - fp * fn) / math.sqrt(den)


def mcc_from_confusion(C) -> float:
    """Gorodkin's R_K; for K = 2 this is the binary formula."""
    C = np.asarray(C, dtype=np.int64)
    s = int(C.sum())
    c = int(np.trace(C))
    t = C.sum(axis=1)
    p = C.sum(axis=0)
    cov_tp = c * s - int(t @ p)
    cov_pp = s * s - int(p @ p)
    cov_tt = s * s - int(t @ t)
    if cov_pp == 0 or cov_tt == 0:
        return 0.0
    return cov_tp / math.sqrt(cov_pp * cov_tt)


def confusion_and_mcc(predictions, labels, K: int) -> Metrics:
    C = confusion_matrix(predictions, labels, K)
    n = C.sum()
    acc = float(np.trace(C) / n) if n else 0.0
    return Metrics(C, mcc_from_confusion(C), acc)


def merge_confusion(C, threshold: int) -> np.ndarray:
    """Collapse a K x K confusion to 2 x 2: class 1 is label >= threshold."""
    C = np.asarray(C)
    hi = np.arange(C.shape[0]) >= threshold
    out = np.zeros((2, 2), dtype=C.dtype)
    for a in (0, 1):
        for b in (0, 1):
            out[a, b] = C[np.ix_(hi == a, hi == b)].sum()
    return out


def metrics_from_confusion(C) -> Metrics:
    C = np.asarray(C)
    n = C.sum()
    return Metrics(C, mcc_from_confusion(C), float(np.trace(C) / n) if n else 0.0)
