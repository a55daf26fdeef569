"""Adam update rule and the shared full-batch threshold fitting loop.

The loop is deliberately minimal: every epoch computes one gradient over
the whole fitting set (no minibatches, which destabilize the gradient
estimate of a ratio metric), applies one Adam step in the ascent
direction, clamps the thresholds back into [0, 1] and records the true
(hard-thresholded) F1. There is no early stopping; the loop always runs
the configured number of epochs.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .metrics import Metric, _ThresholdEvaluator, f1_at_thresholds
from .surrogate import _grad_coefficients, chain_from_coefficients
from .validation import as_threshold_vector


@dataclass(frozen=True)
class AdamConfig:
    """Adam hyperparameters (canonical defaults, lr per method)."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self):
        if not self.lr > 0.0:
            raise ValueError(f"lr must be positive, got {self.lr!r}")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("beta1 and beta2 must lie in [0, 1)")
        if not self.eps > 0.0:
            raise ValueError(f"eps must be positive, got {self.eps!r}")


@dataclass(frozen=True)
class OptimizerState:
    """First/second moment accumulators and the update counter."""

    m: np.ndarray
    v: np.ndarray
    step: int


@dataclass(frozen=True)
class FitConfig:
    """Configuration of a gradient-ascent threshold fit.

    ``slope`` is only consulted by the surrogate-gradient method; ``seed``
    is carried for config echoing (the gradient fits are deterministic).
    """

    epochs: int = 100
    init_threshold: float = 0.5
    adam: AdamConfig = field(default_factory=AdamConfig)
    slope: float = 50.0
    metric: Metric = Metric.MICRO
    seed: int = 0

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if not 0.0 <= self.init_threshold <= 1.0:
            raise ValueError(f"init_threshold must lie in [0, 1], got {self.init_threshold!r}")
        object.__setattr__(self, "metric", Metric.parse(self.metric))


@dataclass
class FitResult:
    """Learned thresholds plus the per-epoch objective trace and timing."""

    thresholds: np.ndarray
    trace: list[float]
    elapsed: float
    epochs_run: int


def adam_init(n_classes: int, cfg: AdamConfig) -> OptimizerState:
    """Fresh optimizer state: zeroed moments, step counter at zero."""
    if n_classes < 1:
        raise ValueError(f"n_classes must be >= 1, got {n_classes}")
    return OptimizerState(
        m=np.zeros(n_classes, dtype=np.float64),
        v=np.zeros(n_classes, dtype=np.float64),
        step=0,
    )


def adam_step(
    state: OptimizerState, params: np.ndarray, grads: np.ndarray, cfg: AdamConfig
) -> tuple[OptimizerState, np.ndarray]:
    """One bias-corrected Adam descent step, result clamped to [0, 1].

    Descent semantics: pass the negated F1 gradient to ascend F1. Clamping
    keeps thresholds inside the score range; values outside it act as
    constant 0-or-1 predictors and starve the gradient.
    """
    params = np.asarray(params, dtype=np.float64)
    grads = np.asarray(grads, dtype=np.float64)
    if not (state.m.shape == state.v.shape == params.shape == grads.shape):
        raise ValueError(
            f"length mismatch: state {state.m.shape}, params {params.shape}, grads {grads.shape}"
        )
    if not np.isfinite(grads).all():
        raise ValueError("gradient contains non-finite values")
    step = state.step + 1
    m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grads
    v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grads * grads
    m_hat = m / (1.0 - cfg.beta1**step)
    v_hat = v / (1.0 - cfg.beta2**step)
    updated = params - cfg.lr * m_hat / (np.sqrt(v_hat) + cfg.eps)
    np.clip(updated, 0.0, 1.0, out=updated)
    return OptimizerState(m=m, v=v, step=step), updated


def fit(dataset: Dataset, cfg: FitConfig, grad_fn, f1_fn=None) -> FitResult:
    """Full-batch gradient ascent on F1 over the dataset's thresholds.

    ``grad_fn(thresholds) -> dF1/dt`` supplies the ascent gradient (the
    surrogate chain rule or a numerical probe). Each epoch: evaluate the
    gradient on all instances, take one Adam step on its negation, then
    record the hard-threshold F1 at the updated values. ``f1_fn`` may
    replace the trace computation with an equivalent faster one; callers
    must keep its values identical to :func:`f1_at_thresholds`.

    Identical (dataset, cfg) pairs produce bit-identical results; nothing
    in the loop is stochastic.
    """
    if f1_fn is None:
        def f1_fn(thresholds):
            return f1_at_thresholds(dataset.scores, thresholds, dataset.labels, cfg.metric)

    start = time.perf_counter()
    thresholds = np.full(dataset.n_classes, float(cfg.init_threshold), dtype=np.float64)
    state = adam_init(dataset.n_classes, cfg.adam)
    trace: list[float] = []
    for _ in range(cfg.epochs):
        grads = grad_fn(thresholds)
        state, thresholds = adam_step(state, thresholds, -np.asarray(grads), cfg.adam)
        trace.append(f1_fn(thresholds))
    elapsed = time.perf_counter() - start
    return FitResult(
        thresholds=as_threshold_vector(thresholds),
        trace=trace,
        elapsed=elapsed,
        epochs_run=cfg.epochs,
    )


def sgl_fit(dataset: Dataset, cfg: FitConfig) -> FitResult:
    """Fit thresholds with the surrogate-gradient backward pass.

    Equivalent to running :func:`fit` on ``surrogate_f1_grad``, with the
    forward counts and the trace both served by sorted-column binary
    searches instead of full matrix passes; gradients and trace values
    are bit-identical to the direct computation.
    """
    ev = _ThresholdEvaluator(dataset.scores, dataset.labels, cfg.metric)
    slope = float(cfg.slope)

    def grad_fn(thresholds: np.ndarray) -> np.ndarray:
        ev.set_thresholds(thresholds)
        lin, const = _grad_coefficients(ev.tp, ev.ap + ev.pp, ev.c, cfg.metric)
        return chain_from_coefficients(
            dataset.scores, thresholds, dataset.labels, slope, lin, const
        )

    def f1_fn(thresholds: np.ndarray) -> float:
        ev.set_thresholds(thresholds)
        return ev.f1()

    return fit(dataset, cfg, grad_fn, f1_fn=f1_fn)
