"""Input validation helpers for score matrices, label matrices and thresholds.

All helpers convert to float64 C-contiguous arrays and raise
:class:`~f1thresh.exceptions.DataValidationError` with the first offending
(row, column) location when a cell is invalid.
"""

from __future__ import annotations

import numpy as np

from .exceptions import DataValidationError


def _first_bad(mask: np.ndarray) -> tuple[int, ...]:
    """Location of the first True cell of a boolean mask, in C order."""
    idx = np.argwhere(mask)
    return tuple(int(v) for v in idx[0])


def as_score_matrix(scores, name: str = "scores") -> np.ndarray:
    """Validate an n x C matrix of confidences in [0, 1].

    Returns a float64 array. Rejects non-2-D input, empty dimensions,
    NaN/Inf and out-of-range values.
    """
    arr = np.asarray(scores, dtype=np.float64)
    if arr.ndim != 2:
        raise DataValidationError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DataValidationError(f"{name} must have at least one row and one column, got shape {arr.shape}")
    finite = np.isfinite(arr)
    if not finite.all():
        r, c = _first_bad(~finite)
        raise DataValidationError(f"{name}: non-finite value at ({r},{c})")
    in_range = (arr >= 0.0) & (arr <= 1.0)
    if not in_range.all():
        r, c = _first_bad(~in_range)
        raise DataValidationError(f"{name}: score out of range at ({r},{c}): {arr[r, c]!r}")
    return np.ascontiguousarray(arr)


def as_label_matrix(labels, name: str = "labels") -> np.ndarray:
    """Validate an n x C binary matrix; every value must be exactly 0 or 1.

    Float storage is accepted (0.0 and 1.0 only), matching the common
    float one-hot encoding of upstream toolkits. Returns a float64 array.
    """
    arr = np.asarray(labels, dtype=np.float64)
    if arr.ndim != 2:
        raise DataValidationError(f"{name} must be 2-D, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DataValidationError(f"{name} must have at least one row and one column, got shape {arr.shape}")
    binary = (arr == 0.0) | (arr == 1.0)
    if not binary.all():
        r, c = _first_bad(~binary)
        raise DataValidationError(f"{name}: label not in {{0,1}} at ({r},{c}): {arr[r, c]!r}")
    return np.ascontiguousarray(arr)


def as_threshold_vector(thresholds, n_classes: int | None = None, name: str = "thresholds") -> np.ndarray:
    """Validate a 1-D vector of per-class thresholds in [0, 1].

    When ``n_classes`` is given, the length must match it exactly.
    """
    arr = np.asarray(thresholds, dtype=np.float64)
    if arr.ndim != 1:
        raise DataValidationError(f"{name} must be 1-D, got shape {arr.shape}")
    if arr.size < 1:
        raise DataValidationError(f"{name} must not be empty")
    if n_classes is not None and arr.size != n_classes:
        raise DataValidationError(f"{name} has length {arr.size}, expected {n_classes} classes")
    finite = np.isfinite(arr)
    if not finite.all():
        (i,) = _first_bad(~finite)
        raise DataValidationError(f"{name}: non-finite value at index {i}")
    in_range = (arr >= 0.0) & (arr <= 1.0)
    if not in_range.all():
        (i,) = _first_bad(~in_range)
        raise DataValidationError(f"{name}: threshold out of range at index {i}: {arr[i]!r}")
    return np.ascontiguousarray(arr)


def check_same_shape(a: np.ndarray, b: np.ndarray, a_name: str = "predictions", b_name: str = "truth") -> None:
    """Raise unless two matrices share the exact same shape."""
    if a.shape != b.shape:
        raise DataValidationError(f"{a_name} shape {a.shape} does not match {b_name} shape {b.shape}")
