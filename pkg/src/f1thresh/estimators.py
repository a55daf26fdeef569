"""Estimator wrappers around the threshold fitting routines.

Each estimator follows the scikit-learn contract: constructor stores
hyperparameters verbatim, ``fit(X, Y)`` learns per-class thresholds from
validation scores X and binary labels Y and returns self, ``predict(X)``
applies them. ``transform`` is an alias for ``predict`` so the estimators
drop into pipelines. Fitted state lives in trailing-underscore attributes.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .data import Dataset
from .exceptions import DataValidationError
from .metrics import Metric, binarize, f1_at_thresholds
from .optim import AdamConfig, FitConfig, sgl_fit
from .search import DichoConfig, NumGradConfig, default_thresholds, dicho_fit, num_fit
from .validation import as_label_matrix, as_score_matrix, check_same_shape


class _ThresholdEstimator(BaseEstimator):
    """Shared predict/score plumbing; subclasses implement _fit."""

    def fit(self, X, Y):
        scores = as_score_matrix(X, name="X")
        labels = as_label_matrix(Y, name="Y")
        check_same_shape(scores, labels, "X", "Y")
        dataset = Dataset(scores=scores, labels=labels)
        self._fit(dataset)
        self.n_classes_ = dataset.n_classes
        return self

    def _fit(self, dataset: Dataset) -> None:
        raise NotImplementedError

    def predict(self, X) -> np.ndarray:
        check_is_fitted(self, "thresholds_")
        scores = as_score_matrix(X, name="X")
        if scores.shape[1] != self.n_classes_:
            raise DataValidationError(
                f"X has {scores.shape[1]} classes, estimator was fitted with {self.n_classes_}"
            )
        return binarize(scores, self.thresholds_)

    def transform(self, X) -> np.ndarray:
        return self.predict(X)

    def score(self, X, Y) -> float:
        """F1 of the thresholded predictions under the estimator's metric."""
        check_is_fitted(self, "thresholds_")
        scores = as_score_matrix(X, name="X")
        labels = as_label_matrix(Y, name="Y")
        check_same_shape(scores, labels, "X", "Y")
        return f1_at_thresholds(scores, self.thresholds_, labels, metric=self.metric)


class FixedThreshold(_ThresholdEstimator):
    """One shared constant threshold for every class, no optimization."""

    def __init__(self, threshold: float = 0.5, metric: str = "micro"):
        self.threshold = threshold
        self.metric = metric

    def _fit(self, dataset: Dataset) -> None:
        self.thresholds_ = default_thresholds(dataset.n_classes, self.threshold)
        self.fit_result_ = None


class DichotomicThreshold(_ThresholdEstimator):
    """Coarse-to-fine stochastic search over per-class thresholds."""

    def __init__(
        self,
        metric: str = "micro",
        init_threshold: float = 0.5,
        coarse_grid: int = 11,
        stages: int = 4,
        samples_per_stage: int = 20,
        sigma0: float = 0.05,
        shrink: float = 0.5,
        seed: int = 0,
    ):
        self.metric = metric
        self.init_threshold = init_threshold
        self.coarse_grid = coarse_grid
        self.stages = stages
        self.samples_per_stage = samples_per_stage
        self.sigma0 = sigma0
        self.shrink = shrink
        self.seed = seed

    def _fit(self, dataset: Dataset) -> None:
        cfg = DichoConfig(
            coarse_grid=self.coarse_grid,
            stages=self.stages,
            samples_per_stage=self.samples_per_stage,
            sigma0=self.sigma0,
            shrink=self.shrink,
            seed=self.seed,
        )
        self.fit_result_ = dicho_fit(
            dataset, cfg, metric=self.metric, init_threshold=self.init_threshold
        )
        self.thresholds_ = self.fit_result_.thresholds


class NumericalGradientThreshold(_ThresholdEstimator):
    """Gradient ascent on F1 with numerically probed gradients."""

    def __init__(
        self,
        metric: str = "micro",
        init_threshold: float = 0.5,
        delta_t: float = 0.01,
        max_steps_multiple: int = 10,
        lr: float = 1e-2,
        epochs: int = 100,
        seed: int = 0,
    ):
        self.metric = metric
        self.init_threshold = init_threshold
        self.delta_t = delta_t
        self.max_steps_multiple = max_steps_multiple
        self.lr = lr
        self.epochs = epochs
        self.seed = seed

    def _fit(self, dataset: Dataset) -> None:
        cfg = NumGradConfig(
            delta_t=self.delta_t,
            max_steps_multiple=self.max_steps_multiple,
            adam=AdamConfig(lr=self.lr),
            epochs=self.epochs,
        )
        self.fit_result_ = num_fit(
            dataset,
            cfg,
            metric=self.metric,
            init_threshold=self.init_threshold,
            seed=self.seed,
        )
        self.thresholds_ = self.fit_result_.thresholds


class SurrogateGradientThreshold(_ThresholdEstimator):
    """Gradient ascent on F1 through a step forward pass with a scaled
    sigmoid derivative standing in for the step's zero gradient."""

    def __init__(
        self,
        metric: str = "micro",
        init_threshold: float = 0.5,
        slope: float = 50.0,
        lr: float = 1e-3,
        epochs: int = 100,
        seed: int = 0,
    ):
        self.metric = metric
        self.init_threshold = init_threshold
        self.slope = slope
        self.lr = lr
        self.epochs = epochs
        self.seed = seed

    def _fit(self, dataset: Dataset) -> None:
        cfg = FitConfig(
            epochs=self.epochs,
            init_threshold=self.init_threshold,
            adam=AdamConfig(lr=self.lr),
            slope=self.slope,
            metric=self.metric,
            seed=self.seed,
        )
        self.fit_result_ = sgl_fit(dataset, cfg)
        self.thresholds_ = self.fit_result_.thresholds


def estimator_for_method(method: str, **kwargs) -> _ThresholdEstimator:
    """Instantiate the estimator matching a method name.

    Accepted names: ``def``, ``dicho``, ``num``, ``sgl``. Keyword
    arguments are passed to the constructor unchanged.
    """
    registry = {
        "def": FixedThreshold,
        "dicho": DichotomicThreshold,
        "num": NumericalGradientThreshold,
        "sgl": SurrogateGradientThreshold,
    }
    if method not in registry:
        raise ValueError(f"unknown method {method!r}, expected one of {sorted(registry)}")
    return registry[method](**kwargs)
