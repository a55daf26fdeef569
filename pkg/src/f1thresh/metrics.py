"""Binarization and exact micro/macro F1, precision and recall.

Conventions, fixed for reproducibility:

* Thresholding is inclusive: a class is active when ``score >= threshold``,
  so the Heaviside step used here has H(0) = 1 and an all-zeros threshold
  vector means "everything active".
* A 0/0 F1 (no positive in the truth, none predicted) scores 1.0 by
  default: an empty class perfectly predicted as empty is not penalized.
  Toolkits differ here, so the convention is configurable through the
  ``empty`` argument (``"one"``, ``"zero"`` or ``"skip"``; ``"skip"``
  drops empty classes from the macro mean and behaves like ``"one"``
  for the pooled micro case, where there is nothing left to score).

All accumulation runs in float64 regardless of the input storage width,
which keeps the sums exact for binary matrices of any realistic size.

The F1 functions accept real-valued prediction matrices as well: the same
formulas evaluated on fractional predictions are the smooth objective used
for gradient verification.
"""

from __future__ import annotations

from enum import Enum

import numpy as np

from .exceptions import DataValidationError
from .validation import check_same_shape

EMPTY_POLICIES = ("one", "zero", "skip")


class Metric(str, Enum):
    """Closed enumeration of the supported averaging modes."""

    MICRO = "micro"
    MACRO = "macro"

    @classmethod
    def parse(cls, value) -> "Metric":
        if isinstance(value, cls):
            return value
        name = str(value).lower().replace("_", "-")
        if name in ("micro", "micro-f1"):
            return cls.MICRO
        if name in ("macro", "macro-f1"):
            return cls.MACRO
        raise ValueError(f"unknown metric {value!r}; expected micro-f1 or macro-f1")


def _empty_value(empty: str) -> float:
    if empty not in EMPTY_POLICIES:
        raise ValueError(f"empty must be one of {EMPTY_POLICIES}, got {empty!r}")
    return 0.0 if empty == "zero" else 1.0


def binarize(scores, thresholds) -> np.ndarray:
    """Apply per-class thresholds to a score matrix.

    ``out[n, l] = 1.0`` iff ``scores[n, l] >= thresholds[l]``. The slope
    of any surrogate used for training never enters here: the forward
    pass is a pure step function.
    """
    p = np.asarray(scores, dtype=np.float64)
    t = np.asarray(thresholds, dtype=np.float64)
    if p.ndim != 2:
        raise DataValidationError(f"scores must be 2-D, got shape {p.shape}")
    if t.ndim != 1 or t.size != p.shape[1]:
        raise DataValidationError(
            f"thresholds shape {t.shape} does not match {p.shape[1]} score columns"
        )
    return (p >= t[np.newaxis, :]).astype(np.float64)


def _as_pair(pred, truth) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(pred, dtype=np.float64)
    y = np.asarray(truth, dtype=np.float64)
    if p.ndim != 2 or y.ndim != 2:
        raise DataValidationError("predictions and truth must be 2-D matrices")
    check_same_shape(p, y)
    return p, y


def micro_f1(pred, truth, empty: str = "one") -> float:
    """Micro-averaged F1: counts pooled over all instances and classes.

    ``2 * sum(y * yhat) / (sum(y) + sum(yhat))``, with the 0/0 case
    resolved by the ``empty`` policy.
    """
    p, y = _as_pair(pred, truth)
    fallback = _empty_value(empty)
    tp2 = 2.0 * float(np.sum(p * y))
    denom = float(np.sum(y)) + float(np.sum(p))
    if denom == 0.0:
        return fallback
    return tp2 / denom


def macro_f1(pred, truth, empty: str = "one") -> float:
    """Macro-averaged F1: unweighted mean of per-class F1 scores.

    Per class, ``2*TP / (2*TP + FP + FN)``; a class with no positive in
    either the truth or the predictions follows the ``empty`` policy.
    """
    p, y = _as_pair(pred, truth)
    fallback = _empty_value(empty)
    tp = np.sum(p * y, axis=0)
    denom = np.sum(y, axis=0) + np.sum(p, axis=0)
    nonempty = denom > 0.0
    per_class = np.full(p.shape[1], fallback, dtype=np.float64)
    np.divide(2.0 * tp, denom, out=per_class, where=nonempty)
    if empty == "skip":
        if not nonempty.any():
            return 1.0
        return float(np.mean(per_class[nonempty]))
    return float(np.mean(per_class))


def micro_precision_recall(pred, truth) -> tuple[float, float]:
    """Pooled precision ``TP/(TP+FP)`` and recall ``TP/(TP+FN)``.

    Each value is defined as 1.0 when its denominator is zero.
    """
    p, y = _as_pair(pred, truth)
    tp = float(np.sum(p * y))
    predicted = float(np.sum(p))
    actual = float(np.sum(y))
    precision = tp / predicted if predicted > 0.0 else 1.0
    recall = tp / actual if actual > 0.0 else 1.0
    return precision, recall


def f1_score(pred, truth, metric, empty: str = "one") -> float:
    """Dispatch to :func:`micro_f1` or :func:`macro_f1` by metric kind."""
    metric = Metric.parse(metric)
    if metric is Metric.MICRO:
        return micro_f1(pred, truth, empty=empty)
    return macro_f1(pred, truth, empty=empty)


def f1_at_thresholds(scores, thresholds, truth, metric, empty: str = "one") -> float:
    """F1 of the Heaviside forward pass at the given thresholds."""
    return f1_score(binarize(scores, thresholds), truth, metric, empty=empty)


class _ThresholdEvaluator:
    """Global F1 under single-class threshold moves, via presorted columns.

    Moving one class's threshold only changes that class's confusion
    counts, so with each class's scores (and its positive-label scores)
    sorted once up front, global F1 after a one-class move costs one
    binary search instead of a full matrix pass. Uses the default
    ``empty="one"`` convention.

    Right after ``set_thresholds``, ``f1()`` is bit-identical to
    :func:`f1_at_thresholds`: all counts are exact integers in float64
    and the same division and summation expressions are used. Macro-F1
    maintains the per-class F1 sum incrementally across ``commit`` calls;
    probe and commit share one float expression, so an accepted move
    reproduces its probed value exactly, while the absolute value may
    drift from a fresh summation by a few ulps over a long run of
    commits.
    """

    def __init__(self, scores: np.ndarray, labels: np.ndarray, metric):
        self.metric = Metric.parse(metric)
        check_same_shape(scores, labels)
        self.n, self.c = scores.shape
        self._sorted = [np.sort(scores[:, l]) for l in range(self.c)]
        self._sorted_pos = [np.sort(scores[labels[:, l] == 1.0, l]) for l in range(self.c)]
        self.ap = labels.sum(axis=0)
        self.ap_total = float(np.sum(labels))
        self.thresholds: np.ndarray | None = None

    def _predicted_pos(self, l: int, taus):
        return self.n - np.searchsorted(self._sorted[l], taus, side="left")

    def _true_pos(self, l: int, taus):
        col = self._sorted_pos[l]
        return col.size - np.searchsorted(col, taus, side="left")

    @staticmethod
    def _safe_f1(tp2, denom):
        tp2 = np.asarray(tp2, dtype=np.float64)
        denom = np.asarray(denom, dtype=np.float64)
        out = np.ones_like(tp2)
        np.divide(tp2, denom, out=out, where=denom > 0.0)
        return out

    def set_thresholds(self, thresholds) -> None:
        t = np.asarray(thresholds, dtype=np.float64)
        self.thresholds = t.copy()
        self.tp = np.array([float(self._true_pos(l, t[l])) for l in range(self.c)])
        self.pp = np.array([float(self._predicted_pos(l, t[l])) for l in range(self.c)])
        self.tp_total = float(self.tp.sum())
        self.pp_total = float(self.pp.sum())
        self.f1_by_class = self._safe_f1(2.0 * self.tp, self.ap + self.pp)
        self.f1_sum = float(np.sum(self.f1_by_class))

    def f1(self) -> float:
        if self.metric is Metric.MICRO:
            return float(self._safe_f1(2.0 * self.tp_total, self.ap_total + self.pp_total))
        return self.f1_sum / self.c

    def probe(self, l: int, taus) -> np.ndarray:
        """Global F1 with class ``l`` moved to each candidate threshold."""
        taus = np.asarray(taus, dtype=np.float64)
        tp_l = self._true_pos(l, taus).astype(np.float64)
        pp_l = self._predicted_pos(l, taus).astype(np.float64)
        if self.metric is Metric.MICRO:
            tp = self.tp_total - self.tp[l] + tp_l
            pp = self.pp_total - self.pp[l] + pp_l
            return self._safe_f1(2.0 * tp, self.ap_total + pp)
        f1_l = self._safe_f1(2.0 * tp_l, self.ap[l] + pp_l)
        return (self.f1_sum - self.f1_by_class[l] + f1_l) / self.c

    def commit(self, l: int, tau: float) -> None:
        tp_l = float(self._true_pos(l, tau))
        pp_l = float(self._predicted_pos(l, tau))
        self.tp_total = self.tp_total - self.tp[l] + tp_l
        self.pp_total = self.pp_total - self.pp[l] + pp_l
        f1_l = float(self._safe_f1(2.0 * tp_l, self.ap[l] + pp_l))
        self.f1_sum = self.f1_sum - self.f1_by_class[l] + f1_l
        self.tp[l] = tp_l
        self.pp[l] = pp_l
        self.f1_by_class[l] = f1_l
        self.thresholds[l] = tau
