"""Per-class decision thresholds that maximize micro or macro F1.

Multi-label classifiers emit one confidence score per class; turning the
scores into decisions takes a per-class threshold, and the common shared
default of 0.5 is rarely where F1 peaks. This package fits the threshold
vector on a validation set, either by gradient ascent through a step
function whose backward pass borrows a scaled sigmoid's derivative, by
numerically probed gradients, or by a coarse-to-fine stochastic search,
and ships a brute-force oracle plus a finite-difference gradient checker
to verify the fits.
"""

from .data import (
    Dataset,
    FoldPlan,
    kfold_split,
    load_matrix,
    load_thresholds,
    make_fold_plan,
    pair_dataset,
    save_matrix,
    save_thresholds,
)
from .estimators import (
    DichotomicThreshold,
    FixedThreshold,
    NumericalGradientThreshold,
    SurrogateGradientThreshold,
    estimator_for_method,
)
from .exceptions import (
    DataValidationError,
    DegenerateDenominatorError,
    ResourceGuardError,
)
from .metrics import (
    Metric,
    binarize,
    f1_at_thresholds,
    f1_score,
    macro_f1,
    micro_f1,
    micro_precision_recall,
)
from .optim import AdamConfig, FitConfig, FitResult, adam_init, adam_step, fit, sgl_fit
from .search import (
    DichoConfig,
    NumGradConfig,
    brute_force_oracle,
    candidate_thresholds,
    default_thresholds,
    dicho_fit,
    num_fit,
    numerical_gradient,
)
from .surrogate import (
    GradCheckResult,
    finite_diff_grad,
    f1_grad_wrt_pred,
    relaxed_f1,
    relaxed_f1_grad,
    run_gradient_check,
    sigmoid,
    surrogate_derivative,
    surrogate_f1_grad,
)
from .synthetic import SyntheticConfig, SyntheticData, make_synthetic, make_synthetic_pair

__version__ = "0.1.0"

__all__ = [
    "AdamConfig",
    "DataValidationError",
    "Dataset",
    "DegenerateDenominatorError",
    "DichoConfig",
    "DichotomicThreshold",
    "FitConfig",
    "FitResult",
    "FixedThreshold",
    "FoldPlan",
    "GradCheckResult",
    "Metric",
    "NumGradConfig",
    "NumericalGradientThreshold",
    "ResourceGuardError",
    "SurrogateGradientThreshold",
    "SyntheticConfig",
    "SyntheticData",
    "adam_init",
    "adam_step",
    "binarize",
    "brute_force_oracle",
    "candidate_thresholds",
    "default_thresholds",
    "dicho_fit",
    "estimator_for_method",
    "f1_at_thresholds",
    "f1_grad_wrt_pred",
    "f1_score",
    "finite_diff_grad",
    "fit",
    "kfold_split",
    "load_matrix",
    "load_thresholds",
    "macro_f1",
    "make_fold_plan",
    "make_synthetic",
    "make_synthetic_pair",
    "micro_f1",
    "micro_precision_recall",
    "num_fit",
    "numerical_gradient",
    "pair_dataset",
    "relaxed_f1",
    "relaxed_f1_grad",
    "run_gradient_check",
    "save_matrix",
    "save_thresholds",
    "sgl_fit",
    "sigmoid",
    "surrogate_derivative",
    "surrogate_f1_grad",
]
