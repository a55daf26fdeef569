"""Synthetic multi-label data with class-dependent planted thresholds.

Each class gets its own separation and prevalence, so the best decision
threshold genuinely varies by class: tuning per class must beat any single
shared cutoff. Scores for positives and negatives are clipped Gaussians
whose means straddle 0.5 by a per-class margin.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset

SEPARABILITY_RANGE = (0.2, 1.0)
PREVALENCE_RANGE = (0.05, 0.5)


@dataclass(frozen=True)
class SyntheticConfig:
    n_instances: int = 2000
    n_classes: int = 20
    noise: float = 0.15
    seed: int = 0

    def __post_init__(self):
        if self.n_instances < 1:
            raise ValueError(f"n_instances must be >= 1, got {self.n_instances}")
        if self.n_classes < 1:
            raise ValueError(f"n_classes must be >= 1, got {self.n_classes}")
        if not self.noise > 0.0:
            raise ValueError(f"noise must be positive, got {self.noise!r}")


@dataclass(frozen=True)
class SyntheticData:
    """A sampled dataset plus the class parameters that generated it."""

    dataset: Dataset
    separability: np.ndarray
    prevalence: np.ndarray


def plant_classes(rng: np.random.Generator, n_classes: int):
    """Draw per-class separability and prevalence."""
    separability = rng.uniform(*SEPARABILITY_RANGE, size=n_classes)
    prevalence = rng.uniform(*PREVALENCE_RANGE, size=n_classes)
    return separability, prevalence


def sample_rows(
    rng: np.random.Generator,
    n_instances: int,
    separability: np.ndarray,
    prevalence: np.ndarray,
    noise: float,
) -> Dataset:
    """Sample one batch of rows from fixed class parameters.

    Positive scores center at 0.5 + 0.4*separability, negatives at
    0.5 - 0.4*separability, both with the given Gaussian noise, clipped
    to [0, 1].
    """
    n_classes = separability.shape[0]
    labels = (rng.random((n_instances, n_classes)) < prevalence).astype(np.float64)
    margin = 0.4 * separability
    means = 0.5 + margin * (2.0 * labels - 1.0)
    scores = means + noise * rng.standard_normal((n_instances, n_classes))
    np.clip(scores, 0.0, 1.0, out=scores)
    return Dataset(scores=scores, labels=labels)


def make_synthetic(cfg: SyntheticConfig) -> SyntheticData:
    """Plant class parameters and sample one dataset from them."""
    rng = np.random.default_rng(cfg.seed)
    separability, prevalence = plant_classes(rng, cfg.n_classes)
    dataset = sample_rows(rng, cfg.n_instances, separability, prevalence, cfg.noise)
    return SyntheticData(dataset=dataset, separability=separability, prevalence=prevalence)


def make_synthetic_pair(cfg: SyntheticConfig, n_eval: int | None = None):
    """Fitting and held-out datasets drawn from the same class parameters.

    The eval part defaults to the fitting size. Returns (fit_data, eval_dataset).
    """
    if n_eval is None:
        n_eval = cfg.n_instances
    if n_eval < 1:
        raise ValueError(f"n_eval must be >= 1, got {n_eval}")
    rng = np.random.default_rng(cfg.seed)
    separability, prevalence = plant_classes(rng, cfg.n_classes)
    fit_dataset = sample_rows(rng, cfg.n_instances, separability, prevalence, cfg.noise)
    eval_dataset = sample_rows(rng, n_eval, separability, prevalence, cfg.noise)
    fit_data = SyntheticData(dataset=fit_dataset, separability=separability, prevalence=prevalence)
    return fit_data, eval_dataset
