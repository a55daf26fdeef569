"""Surrogate gradients of F1 with respect to decision thresholds.

F1 of thresholded predictions is piecewise constant in the thresholds: the
step function has zero derivative almost everywhere, so plain calculus
gives nothing to ascend. The machinery here splits the chain rule

    dF1/dt[l] = sum_n dF1/dyhat[n,l] * dyhat[n,l]/dt[l]

into an exact analytic factor and a surrogate factor:

* ``f1_grad_wrt_pred`` is the exact gradient of the (micro or macro) F1
  ratio with respect to the prediction matrix, valid for binary or
  fractional predictions.
* The step derivative is replaced by the derivative of a scaled sigmoid,
  ``slope * sig(x) * sig(-x)`` evaluated at ``x = score - threshold``,
  times the ``-1`` inner derivative of ``x`` with respect to the
  threshold.

The forward pass stays a hard step function; the sigmoid only shapes the
backward signal. ``relaxed_f1`` swaps the step for the sigmoid in the
forward direction too, which makes the objective smooth; its analytic
gradient must then match central finite differences, and that agreement
is the correctness check for the whole chain (``run_gradient_check``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DegenerateDenominatorError
from .metrics import Metric, binarize, f1_score
from .validation import check_same_shape


def _check_slope(slope) -> float:
    a = float(slope)
    if not np.isfinite(a) or a <= 0.0:
        raise ValueError(f"slope must be a positive finite number, got {slope!r}")
    return a


def sigmoid(x, slope=1.0):
    """Scaled logistic function ``1 / (1 + exp(-slope * x))``.

    Computed with the two-branch formulation so large ``|slope * x|``
    saturates to 0.0 or 1.0 without overflow. Accepts scalars or arrays.
    """
    a = _check_slope(slope)
    z = np.asarray(x, dtype=np.float64) * a
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return float(out[0]) if scalar else out


def surrogate_derivative(x, slope):
    """Derivative of the scaled sigmoid: ``slope * sig(x) * sig(-x)``.

    An even function of ``x`` peaking at ``slope / 4`` at the origin; it
    stands in for the step function's derivative during backpropagation.
    Computed as ``slope * s * (1 - s)`` with ``s = sig(x)``, one exp per
    entry; far from the origin it underflows cleanly to zero.
    """
    a = _check_slope(slope)
    z = np.asarray(x, dtype=np.float64) * a
    # sig(z)*(1-sig(z)) rewritten as w/(1+w)^2 with w = exp(-|z|): one exp,
    # no overflow for any z, and symmetric in z by construction.
    w = np.exp(-np.abs(z))
    d = w / np.square(1.0 + w)
    if d.ndim == 0:
        return float(a * d)
    return a * d


def _grad_coefficients(tp, s, n_classes: int, metric) -> tuple[np.ndarray, np.ndarray]:
    """Per-class (lin, const) such that dF1/dyhat[n, l] = lin[l] * y[n, l] + const[l].

    The F1 gradient is affine in the truth indicator, so it is fully
    described by per-class true-positive counts ``tp`` and denominator
    counts ``s = actual positives + predicted positives`` (fractional
    sums for relaxed predictions). Micro pools the counts and broadcasts
    one pair of scalars; macro divides per-class values by the class
    count and zeroes classes with ``s[l] == 0``.
    """
    tp = np.asarray(tp, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    if metric is Metric.MICRO:
        s_all = float(s.sum())
        if s_all == 0.0:
            raise DegenerateDenominatorError(
                "micro-F1 gradient is undefined: no positive labels and no positive predictions"
            )
        t_all = float(tp.sum())
        lin = np.full(n_classes, 2.0 / s_all)
        const = np.full(n_classes, -(2.0 * t_all / (s_all * s_all)))
        return lin, const
    nonempty = s > 0.0
    lin = np.zeros(n_classes, dtype=np.float64)
    const = np.zeros(n_classes, dtype=np.float64)
    np.divide(2.0, n_classes * s, out=lin, where=nonempty)
    np.divide(-2.0 * tp, n_classes * s * s, out=const, where=nonempty)
    return lin, const


def f1_grad_wrt_pred(pred, truth, metric) -> np.ndarray:
    """Exact gradient of F1 with respect to each prediction entry.

    With ``T = sum(y * yhat)`` and ``S = sum(y) + sum(yhat)`` (pooled for
    micro; per class for macro), the quotient rule gives

        d(2T/S)/dyhat[n,l] = 2 * (y[n,l] * S - T) / S**2

    evaluated at the prediction matrix as passed, binary or fractional.
    For macro the per-class gradients are divided by the class count, and
    a class whose denominator is zero gets an all-zero column: its F1 is
    constant on a neighborhood, and zero is the one subgradient choice
    that leaves empty classes untouched.

    Raises:
        DegenerateDenominatorError: micro metric with ``S == 0`` (truth
            has no positive and every prediction is zero).
    """
    p = np.asarray(pred, dtype=np.float64)
    y = np.asarray(truth, dtype=np.float64)
    check_same_shape(p, y)
    metric = Metric.parse(metric)
    tp = np.einsum("nc,nc->c", p, y)
    s = np.sum(y, axis=0) + np.sum(p, axis=0)
    lin, const = _grad_coefficients(tp, s, p.shape[1], metric)
    return y * lin[np.newaxis, :] + const[np.newaxis, :]


def _chain_to_thresholds(grad_pred: np.ndarray, scores: np.ndarray, thresholds: np.ndarray, slope: float) -> np.ndarray:
    # dyhat/dt = -surrogate_derivative(score - threshold): the -1 is the
    # inner derivative of (score - threshold) with respect to the threshold.
    sd = surrogate_derivative(scores - thresholds[np.newaxis, :], slope)
    return -np.sum(grad_pred * sd, axis=0)


def chain_from_coefficients(scores, thresholds, truth, slope, lin, const) -> np.ndarray:
    """Chain affine F1-gradient coefficients through the surrogate.

    Equals ``_chain_to_thresholds`` on the materialized gradient matrix,
    regrouped so only the surrogate derivative touches the full matrix:

        -sum_n (lin*y + const) * sd  =  -(lin * sum_n y*sd + const * sum_n sd)

    which is what keeps large fits linear-time without a (n, C) gradient
    temporary. The surrogate derivative is evaluated with in-place
    elementwise steps (two scratch matrices for the whole chain instead of
    one per operation); each step performs the same float64 operation as
    :func:`surrogate_derivative`, so the result is bit-identical to
    chaining through that function.
    """
    a = _check_slope(slope)
    y = np.asarray(truth, dtype=np.float64)
    sd = np.asarray(scores, dtype=np.float64) - thresholds[np.newaxis, :]
    np.multiply(sd, a, out=sd)
    np.abs(sd, out=sd)
    np.negative(sd, out=sd)
    np.exp(sd, out=sd)
    denom = sd + 1.0
    np.square(denom, out=denom)
    np.divide(sd, denom, out=sd)
    np.multiply(sd, a, out=sd)
    return -(lin * np.einsum("nc,nc->c", y, sd) + const * np.sum(sd, axis=0))


def surrogate_f1_grad(scores, thresholds, truth, slope, metric) -> np.ndarray:
    """Surrogate estimate of ``dF1/dt``, one value per class.

    Forward pass: hard thresholding (``score >= threshold``). Backward
    pass: the exact F1 gradient at the binary predictions, chained through
    the sigmoid surrogate in place of the step derivative. The result is a
    true ascent direction: adding a positive multiple of it to the
    thresholds moves F1 uphill in the surrogate's smoothed view.
    """
    p = np.asarray(scores, dtype=np.float64)
    t = np.asarray(thresholds, dtype=np.float64)
    y = np.asarray(truth, dtype=np.float64)
    yhat = binarize(p, t)
    check_same_shape(yhat, y)
    tp = np.einsum("nc,nc->c", yhat, y)
    s = np.sum(y, axis=0) + np.sum(yhat, axis=0)
    lin, const = _grad_coefficients(tp, s, p.shape[1], Metric.parse(metric))
    return chain_from_coefficients(p, t, y, _check_slope(slope), lin, const)


def relaxed_f1(scores, thresholds, truth, slope, metric) -> float:
    """Fully smooth F1 with ``yhat = sig(slope * (score - threshold))``.

    Used for verification only: unlike the hard forward pass, this
    objective is differentiable in the thresholds, so its analytic
    gradient can be checked against finite differences.
    """
    p = np.asarray(scores, dtype=np.float64)
    t = np.asarray(thresholds, dtype=np.float64)
    yhat = sigmoid(p - t[np.newaxis, :], slope)
    return f1_score(yhat, truth, metric)


def relaxed_f1_grad(scores, thresholds, truth, slope, metric) -> np.ndarray:
    """Analytic gradient of :func:`relaxed_f1` with respect to thresholds.

    Same chain rule as :func:`surrogate_f1_grad`, with the F1 gradient
    evaluated at the relaxed (fractional) predictions instead of the
    binary ones.
    """
    p = np.asarray(scores, dtype=np.float64)
    t = np.asarray(thresholds, dtype=np.float64)
    a = _check_slope(slope)
    yhat = sigmoid(p - t[np.newaxis, :], a)
    grad_pred = f1_grad_wrt_pred(yhat, truth, metric)
    return _chain_to_thresholds(grad_pred, p, t, a)


def finite_diff_grad(objective, thresholds, step: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of a scalar objective of the thresholds.

    ``g[l] = (f(t + step * e_l) - f(t - step * e_l)) / (2 * step)``.
    """
    h = float(step)
    if not np.isfinite(h) or h <= 0.0:
        raise ValueError(f"step must be positive, got {step!r}")
    t = np.asarray(thresholds, dtype=np.float64)
    grad = np.empty_like(t)
    for l in range(t.size):
        t_plus = t.copy()
        t_minus = t.copy()
        t_plus[l] += h
        t_minus[l] -= h
        grad[l] = (objective(t_plus) - objective(t_minus)) / (2.0 * h)
    return grad


# ---------------------------------------------------------------------------
# Gradient check harness
# ---------------------------------------------------------------------------


@dataclass
class GradCheckResult:
    """Outcome of a randomized analytic-vs-numeric gradient comparison."""

    trials: int
    coordinates: int
    failures: int
    worst_rel_err: float
    worst_abs_err: float
    tolerance: float
    abs_floor: float

    @property
    def passed(self) -> bool:
        return self.failures == 0


def run_gradient_check(
    n_max: int = 32,
    c_max: int = 8,
    trials: int = 200,
    slopes=(5.0, 20.0, 50.0),
    tolerance: float = 1e-4,
    abs_floor: float = 1e-7,
    small_ref: float = 1e-3,
    step: float = 1e-6,
    seed: int = 0,
) -> GradCheckResult:
    """Compare the analytic relaxed-F1 gradient to central differences.

    Each trial draws a random dataset (sizes up to ``n_max`` x ``c_max``),
    random thresholds in (0.05, 0.95), a slope from ``slopes`` and a
    metric. A coordinate passes when the relative error is at most
    ``tolerance``; where the reference value is below ``small_ref``, the
    absolute error must be at most ``abs_floor`` instead.
    """
    rng = np.random.default_rng(seed)
    slopes = tuple(float(a) for a in slopes)
    failures = 0
    coords = 0
    worst_rel = 0.0
    worst_abs = 0.0
    for trial in range(trials):
        n = int(rng.integers(2, n_max + 1))
        c = int(rng.integers(1, c_max + 1))
        scores = rng.random((n, c))
        truth = (rng.random((n, c)) < rng.uniform(0.1, 0.9)).astype(np.float64)
        thresholds = rng.uniform(0.05, 0.95, c)
        slope = slopes[trial % len(slopes)]
        metric = Metric.MICRO if trial % 2 == 0 else Metric.MACRO

        analytic = relaxed_f1_grad(scores, thresholds, truth, slope, metric)
        reference = finite_diff_grad(
            lambda t: relaxed_f1(scores, t, truth, slope, metric), thresholds, step
        )
        for l in range(c):
            coords += 1
            err = abs(analytic[l] - reference[l])
            if abs(reference[l]) < small_ref:
                worst_abs = max(worst_abs, err)
                if err > abs_floor:
                    failures += 1
            else:
                rel = err / abs(reference[l])
                worst_rel = max(worst_rel, rel)
                if rel > tolerance:
                    failures += 1
    return GradCheckResult(
        trials=trials,
        coordinates=coords,
        failures=failures,
        worst_rel_err=worst_rel,
        worst_abs_err=worst_abs,
        tolerance=tolerance,
        abs_floor=abs_floor,
    )
