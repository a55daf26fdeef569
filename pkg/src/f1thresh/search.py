"""Threshold search without surrogate gradients.

Methods here share one piece of machinery: changing a single class's
threshold only changes that class's confusion counts, so global F1 under
a one-class move can be re-evaluated from cached per-class counts instead
of re-thresholding the whole matrix. Each class's scores (and its
positive-label scores) are sorted once up front; a probe then costs one
binary search per candidate instead of a full O(n*C) pass. That turns the
naive O(n*C) cost per probe, quadratic in C per full gradient sweep, into
O(log n), keeping full sweeps linear in the class count.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .data import Dataset
from .exceptions import ResourceGuardError
from .metrics import Metric, _ThresholdEvaluator
from .optim import AdamConfig, FitConfig, FitResult, fit
from .validation import as_threshold_vector


@dataclass(frozen=True)
class DichoConfig:
    """Coarse-to-fine stochastic threshold search settings.

    Stage 0 sweeps ``coarse_grid`` equispaced candidates per class; each
    refinement stage then draws ``samples_per_stage`` Gaussian proposals
    per class around the incumbent, with the proposal spread starting at
    ``sigma0`` and shrinking by ``shrink`` every stage.
    """

    coarse_grid: int = 11
    stages: int = 4
    samples_per_stage: int = 20
    sigma0: float = 0.05
    shrink: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.coarse_grid < 2:
            raise ValueError(f"coarse_grid must be >= 2, got {self.coarse_grid}")
        if self.stages < 1:
            raise ValueError(f"stages must be >= 1, got {self.stages}")
        if self.samples_per_stage < 1:
            raise ValueError(f"samples_per_stage must be >= 1, got {self.samples_per_stage}")
        if not self.sigma0 > 0.0:
            raise ValueError(f"sigma0 must be positive, got {self.sigma0!r}")
        if not 0.0 < self.shrink < 1.0:
            raise ValueError(f"shrink must lie in (0, 1), got {self.shrink!r}")


@dataclass(frozen=True)
class NumGradConfig:
    """Numerical-gradient ascent settings.

    Per class, F1 is probed at offsets ``delta_t .. max_steps_multiple *
    delta_t`` above the current threshold; the gradient is the best
    observed F1 change divided by its offset.
    """

    delta_t: float = 0.01
    max_steps_multiple: int = 10
    adam: AdamConfig = field(default_factory=lambda: AdamConfig(lr=1e-2))
    epochs: int = 100

    def __post_init__(self):
        if not self.delta_t > 0.0:
            raise ValueError(f"delta_t must be positive, got {self.delta_t!r}")
        if self.max_steps_multiple < 1:
            raise ValueError(f"max_steps_multiple must be >= 1, got {self.max_steps_multiple}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")


def default_thresholds(n_classes: int, value: float) -> np.ndarray:
    """Constant threshold vector: one shared default for every class."""
    if n_classes < 1:
        raise ValueError(f"n_classes must be >= 1, got {n_classes}")
    v = float(value)
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"default threshold must lie in [0, 1], got {value!r}")
    return np.full(n_classes, v, dtype=np.float64)


def _best_candidate(evaluator: _ThresholdEvaluator, l: int, candidates: np.ndarray) -> tuple[float, float]:
    """Max-F1 candidate for one class; ties resolve to the lowest threshold.

    ``candidates`` must be sorted ascending so the first argmax is the
    smallest threshold among ties.
    """
    f1s = evaluator.probe(l, candidates)
    i = int(np.argmax(f1s))
    return float(candidates[i]), float(f1s[i])


def dicho_fit(
    dataset: Dataset, cfg: DichoConfig, metric, init_threshold: float = 0.5
) -> FitResult:
    """Coarse-to-fine stochastic search for per-class thresholds.

    Classes are processed coordinate-wise in ascending index order,
    holding all other classes at their current values. The incumbent is
    always part of the candidate set, so the incumbent F1 trace (one entry
    after the coarse stage, one per refinement stage) never decreases.
    Identical seeds reproduce identical results.
    """
    start = time.perf_counter()
    metric = Metric.parse(metric)
    rng = np.random.default_rng(cfg.seed)
    ev = _ThresholdEvaluator(dataset.scores, dataset.labels, metric)
    thresholds = default_thresholds(dataset.n_classes, init_threshold)
    ev.set_thresholds(thresholds)
    trace: list[float] = []

    grid = np.linspace(0.0, 1.0, cfg.coarse_grid)
    for l in range(dataset.n_classes):
        candidates = np.unique(np.append(grid, thresholds[l]))
        tau, _ = _best_candidate(ev, l, candidates)
        ev.commit(l, tau)
        thresholds[l] = tau
    trace.append(ev.f1())

    for stage in range(1, cfg.stages + 1):
        sigma = cfg.sigma0 * cfg.shrink ** (stage - 1)
        for l in range(dataset.n_classes):
            proposals = np.clip(thresholds[l] + sigma * rng.standard_normal(cfg.samples_per_stage), 0.0, 1.0)
            candidates = np.unique(np.append(proposals, thresholds[l]))
            tau, _ = _best_candidate(ev, l, candidates)
            ev.commit(l, tau)
            thresholds[l] = tau
        trace.append(ev.f1())

    elapsed = time.perf_counter() - start
    return FitResult(
        thresholds=as_threshold_vector(thresholds),
        trace=trace,
        elapsed=elapsed,
        epochs_run=cfg.stages + 1,
    )


def _numerical_gradient(ev: _ThresholdEvaluator, thresholds: np.ndarray, cfg: NumGradConfig) -> np.ndarray:
    ev.set_thresholds(thresholds)
    base = ev.f1()
    offsets = cfg.delta_t * np.arange(1, cfg.max_steps_multiple + 1)
    grad = np.zeros(ev.c, dtype=np.float64)
    for l in range(ev.c):
        deltas = ev.probe(l, thresholds[l] + offsets) - base
        k = _pick_offset(deltas)
        if k is not None:
            grad[l] = deltas[k] / offsets[k]
            continue
        deltas = ev.probe(l, thresholds[l] - offsets) - base
        k = _pick_offset(deltas)
        if k is not None:
            grad[l] = deltas[k] / -offsets[k]
    return grad


def _pick_offset(deltas: np.ndarray):
    """Offset selection: largest improvement first, else largest change.

    Returns the index of the chosen probe, or None when every probe left
    F1 unchanged. Ties resolve to the smallest offset.
    """
    if (deltas > 0.0).any():
        return int(np.argmax(deltas))
    if (deltas != 0.0).any():
        return int(np.argmax(np.abs(deltas)))
    return None


def numerical_gradient(dataset: Dataset, thresholds, cfg: NumGradConfig, metric) -> np.ndarray:
    """Probe-based estimate of ``dF1/dt``, one value per class.

    Per class, global F1 is probed at the configured offsets above the
    current threshold (all other classes fixed) and the gradient is the
    selected F1 change over its offset. Upward probes alone cannot lower a
    threshold stranded on a flat segment, so when every upward probe
    leaves F1 unchanged the same offsets are probed downward before the
    gradient is declared zero.
    """
    ev = _ThresholdEvaluator(dataset.scores, dataset.labels, metric)
    t = as_threshold_vector(thresholds, n_classes=dataset.n_classes)
    return _numerical_gradient(ev, t, cfg)


def num_fit(
    dataset: Dataset, cfg: NumGradConfig, metric, init_threshold: float = 0.5, seed: int = 0
) -> FitResult:
    """Threshold ascent driven by numerically probed F1 gradients.

    Same loop as the surrogate fit (full batch, Adam on the negated
    gradient, clamped thresholds), with the probe gradient in place of the
    surrogate chain rule. The per-class sorted columns are built once and
    reused across epochs.
    """
    ev = _ThresholdEvaluator(dataset.scores, dataset.labels, metric)
    fit_cfg = FitConfig(
        epochs=cfg.epochs,
        init_threshold=init_threshold,
        adam=cfg.adam,
        metric=metric,
        seed=seed,
    )

    def grad_fn(thresholds: np.ndarray) -> np.ndarray:
        return _numerical_gradient(ev, thresholds, cfg)

    def f1_fn(thresholds: np.ndarray) -> float:
        ev.set_thresholds(thresholds)
        return ev.f1()

    return fit(dataset, fit_cfg, grad_fn, f1_fn=f1_fn)


# ---------------------------------------------------------------------------
# Brute-force oracle
# ---------------------------------------------------------------------------

ORACLE_GUARD = 10**7


def candidate_thresholds(scores_column: np.ndarray) -> np.ndarray:
    """All decision-distinct thresholds for one class's scores.

    Midpoints between consecutive sorted unique scores, plus 0 and 1:
    every achievable prediction pattern over thresholds in [0, 1] is
    realized by exactly one candidate.
    """
    u = np.unique(np.asarray(scores_column, dtype=np.float64))
    mids = (u[:-1] + u[1:]) / 2.0
    return np.unique(np.concatenate(([0.0], mids, [1.0])))


def brute_force_oracle(dataset: Dataset, metric, mode: str = "exact_1d") -> FitResult:
    """Exhaustive reference search over decision-distinct thresholds.

    ``exact_1d`` (single class only) sweeps every candidate and returns
    the global optimum. ``coordinate_exhaustive`` starts from 0.5 and runs
    round-robin coordinate sweeps over the per-class candidate sets until
    no move improves F1, a coordinate-wise local optimum of the discrete
    problem; the product of candidate-set sizes is capped to keep the
    run bounded. Ties resolve to the lowest threshold in both modes.
    """
    start = time.perf_counter()
    metric = Metric.parse(metric)
    ev = _ThresholdEvaluator(dataset.scores, dataset.labels, metric)
    candidates = [candidate_thresholds(dataset.scores[:, l]) for l in range(dataset.n_classes)]

    if mode == "exact_1d":
        if dataset.n_classes != 1:
            raise ValueError(f"exact_1d requires a single class, got C={dataset.n_classes}")
        ev.set_thresholds(np.array([0.5]))
        tau, best = _best_candidate(ev, 0, candidates[0])
        elapsed = time.perf_counter() - start
        return FitResult(
            thresholds=np.array([tau]), trace=[best], elapsed=elapsed, epochs_run=1
        )

    if mode != "coordinate_exhaustive":
        raise ValueError(f"mode must be 'exact_1d' or 'coordinate_exhaustive', got {mode!r}")

    total = math.prod(len(c) for c in candidates)
    if total > ORACLE_GUARD:
        raise ResourceGuardError(
            f"candidate-set product {total} exceeds the oracle guard of {ORACLE_GUARD}"
        )
    thresholds = default_thresholds(dataset.n_classes, 0.5)
    ev.set_thresholds(thresholds)
    trace: list[float] = []
    passes = 0
    improved = True
    while improved:
        improved = False
        for l in range(dataset.n_classes):
            current_f1 = ev.f1()
            tau, best = _best_candidate(ev, l, candidates[l])
            if best > current_f1 or (best == current_f1 and tau < thresholds[l]):
                ev.commit(l, tau)
                thresholds[l] = tau
                improved = True
        passes += 1
        trace.append(ev.f1())
    elapsed = time.perf_counter() - start
    return FitResult(
        thresholds=as_threshold_vector(thresholds),
        trace=trace,
        elapsed=elapsed,
        epochs_run=passes,
    )
