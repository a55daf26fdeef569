"""Matrix file formats, dataset pairing, threshold files and k-fold splitting.

Two matrix formats are supported:

* CSV: UTF-8, comma separated, one instance per row, decimal floats, no
  header by default (``header=True`` skips a single leading line).
* Binary: 16-byte little-endian header (magic ``F1TM``, version u32,
  n u32, C u32) followed by ``n * C`` float32 values, row major. Intended
  for large score matrices where CSV parsing is too slow.

The format is detected from the file content (binary files start with the
magic bytes), so callers never have to declare it.

Threshold vectors are stored as JSON objects
``{"version": 1, "num_classes": C, "thresholds": [...]}``. Floats are
serialized with :func:`repr` semantics (shortest decimal that round-trips,
at most 17 significant digits), so save/load is bit-exact.
"""

from __future__ import annotations

import csv
import json
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .exceptions import DataValidationError
from .validation import as_label_matrix, as_score_matrix, as_threshold_vector

MAGIC = b"F1TM"
BINARY_VERSION = 1
_HEADER = struct.Struct("<4sIII")

THRESHOLD_FILE_VERSION = 1

_SPLITMIX64_GAMMA = 0x9E3779B97F4A7C15
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class Dataset:
    """A paired score/label matrix with identical dimensions.

    The dataset takes ownership of both arrays: they are marked read-only
    so the pair can be shared freely across threads.
    """

    scores: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        if self.scores.shape != self.labels.shape:
            raise DataValidationError(
                f"scores shape {self.scores.shape} does not match labels shape {self.labels.shape}"
            )
        self.scores.flags.writeable = False
        self.labels.flags.writeable = False

    @property
    def n_instances(self) -> int:
        return self.scores.shape[0]

    @property
    def n_classes(self) -> int:
        return self.scores.shape[1]

    def subset(self, indices) -> "Dataset":
        """New dataset holding the given rows, in the given order."""
        idx = np.asarray(indices, dtype=np.intp)
        return Dataset(self.scores[idx], self.labels[idx])


@dataclass(frozen=True)
class FoldPlan:
    """Assignment of each instance to one of ``k`` folds."""

    k: int
    assignments: np.ndarray

    def __post_init__(self):
        if self.assignments.min() < 0 or self.assignments.max() >= self.k:
            raise DataValidationError("fold indices must lie in [0, k)")
        counts = np.bincount(self.assignments, minlength=self.k)
        if counts.min() < 1:
            raise DataValidationError("every fold must be non-empty")
        if counts.max() - counts.min() > 1:
            raise DataValidationError("fold sizes may differ by at most 1")
        self.assignments.flags.writeable = False


def pair_dataset(scores, labels) -> Dataset:
    """Validate and pair a score matrix with its label matrix."""
    s = as_score_matrix(scores)
    y = as_label_matrix(labels)
    if s.shape != y.shape:
        raise DataValidationError(f"scores shape {s.shape} does not match labels shape {y.shape}")
    return Dataset(s, y)


# ---------------------------------------------------------------------------
# Matrix I/O
# ---------------------------------------------------------------------------


def _validate_kind(arr: np.ndarray, kind: str, path) -> np.ndarray:
    if kind == "scores":
        return as_score_matrix(arr, name=str(path))
    if kind == "labels":
        return as_label_matrix(arr, name=str(path))
    raise ValueError(f"expected_kind must be 'scores' or 'labels', got {kind!r}")


def _load_csv(path: Path, kind: str, header: bool) -> np.ndarray:
    rows: list[list[float]] = []
    width = None
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        for raw_index, cells in enumerate(reader):
            if header and raw_index == 0:
                continue
            if not cells or (len(cells) == 1 and cells[0].strip() == ""):
                continue
            row_index = len(rows)
            if width is None:
                width = len(cells)
            elif len(cells) != width:
                raise DataValidationError(
                    f"{path}: row {row_index} has {len(cells)} columns, expected {width}"
                )
            row = []
            for col_index, cell in enumerate(cells):
                try:
                    row.append(float(cell))
                except ValueError:
                    raise DataValidationError(
                        f"{path}: non-numeric cell at ({row_index},{col_index}): {cell!r}"
                    ) from None
            rows.append(row)
    if not rows:
        raise DataValidationError(f"{path}: file contains no data rows")
    return _validate_kind(np.asarray(rows, dtype=np.float64), kind, path)


def _load_binary(path: Path, kind: str) -> np.ndarray:
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        if len(head) != _HEADER.size:
            raise DataValidationError(f"{path}: truncated binary header")
        magic, version, n, c = _HEADER.unpack(head)
        if magic != MAGIC:
            raise DataValidationError(f"{path}: bad magic {magic!r}")
        if version != BINARY_VERSION:
            raise DataValidationError(f"{path}: unsupported binary version {version}")
        if n < 1 or c < 1:
            raise DataValidationError(f"{path}: invalid dimensions {n}x{c}")
        payload = fh.read(4 * n * c + 1)
    if len(payload) != 4 * n * c:
        raise DataValidationError(f"{path}: payload has {len(payload)} bytes, expected {4 * n * c}")
    arr = np.frombuffer(payload, dtype="<f4").astype(np.float64).reshape(n, c)
    return _validate_kind(arr, kind, path)


def load_matrix(path, expected_kind: str, header: bool = False) -> np.ndarray:
    """Load a score or label matrix from a CSV or binary file.

    Args:
        path: file to read; the format is sniffed from its first bytes.
        expected_kind: ``"scores"`` (values in [0,1]) or ``"labels"``
            (values exactly 0 or 1).
        header: skip one leading CSV header line. Ignored for binary files.

    Returns:
        float64 array of shape (n, C).
    """
    p = Path(path)
    try:
        with open(p, "rb") as fh:
            prefix = fh.read(len(MAGIC))
    except OSError as exc:
        raise DataValidationError(f"cannot read {p}: {exc}") from exc
    if prefix == MAGIC:
        return _load_binary(p, expected_kind)
    return _load_csv(p, expected_kind, header)


def save_matrix(matrix, path, fmt: str = "csv") -> None:
    """Write a matrix as CSV (full precision) or as the binary format.

    CSV cells use shortest round-trip decimal serialization, so a CSV
    round trip is the identity on float64 values. The binary format stores
    float32, so a binary round trip is exact only for float32-representable
    values.
    """
    arr = np.asarray(matrix, dtype=np.float64)
    if arr.ndim != 2:
        raise DataValidationError(f"matrix must be 2-D, got shape {arr.shape}")
    p = Path(path)
    if fmt == "csv":
        with open(p, "w", encoding="utf-8", newline="") as fh:
            for row in arr:
                fh.write(",".join(repr(float(v)) for v in row))
                fh.write("\n")
    elif fmt == "binary":
        n, c = arr.shape
        with open(p, "wb") as fh:
            fh.write(_HEADER.pack(MAGIC, BINARY_VERSION, n, c))
            fh.write(np.ascontiguousarray(arr, dtype="<f4").tobytes())
    else:
        raise ValueError(f"fmt must be 'csv' or 'binary', got {fmt!r}")


# ---------------------------------------------------------------------------
# Threshold files
# ---------------------------------------------------------------------------


def save_thresholds(thresholds, path) -> None:
    """Write a threshold vector to its JSON file format."""
    t = as_threshold_vector(thresholds)
    payload = {
        "version": THRESHOLD_FILE_VERSION,
        "num_classes": int(t.size),
        "thresholds": [float(v) for v in t],
    }
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def load_thresholds(path, n_classes: int | None = None) -> np.ndarray:
    """Load a threshold vector, optionally checking its class count."""
    p = Path(path)
    try:
        with open(p, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except OSError as exc:
        raise DataValidationError(f"cannot read {p}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DataValidationError(f"{p}: malformed threshold file: {exc}") from exc
    if not isinstance(payload, dict) or "thresholds" not in payload:
        raise DataValidationError(f"{p}: malformed threshold file: missing 'thresholds'")
    if payload.get("version") != THRESHOLD_FILE_VERSION:
        raise DataValidationError(f"{p}: unsupported threshold file version {payload.get('version')!r}")
    t = as_threshold_vector(payload["thresholds"], name=str(p))
    declared = payload.get("num_classes")
    if declared is not None and int(declared) != t.size:
        raise DataValidationError(f"{p}: declares {declared} classes but holds {t.size} thresholds")
    if n_classes is not None and t.size != n_classes:
        raise DataValidationError(f"{p}: has {t.size} thresholds, expected {n_classes}")
    return t


# ---------------------------------------------------------------------------
# Deterministic k-fold splitting
# ---------------------------------------------------------------------------
#
# The shuffle is driven by the splitmix64 generator (Steele et al.'s
# SplittableRandom stream function): 64-bit state advanced by the constant
# 0x9E3779B97F4A7C15, output mixed with two xor-shift-multiply rounds.
# Fold shuffling runs a descending Fisher-Yates pass where each bounded
# draw uses rejection sampling on the raw 64-bit stream, so the split is
# reproducible by any implementation of the same named algorithm.


def _splitmix64_next(state: int) -> tuple[int, int]:
    state = (state + _SPLITMIX64_GAMMA) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


class SplitMix64:
    """Minimal splitmix64 stream used for reproducible shuffling."""

    def __init__(self, seed: int):
        self._state = seed & _MASK64

    def next_uint64(self) -> int:
        self._state, out = _splitmix64_next(self._state)
        return out

    def next_below(self, bound: int) -> int:
        """Uniform integer in [0, bound), by rejection (no modulo bias)."""
        if bound <= 0:
            raise ValueError("bound must be positive")
        limit = (1 << 64) - ((1 << 64) % bound)
        while True:
            r = self.next_uint64()
            if r < limit:
                return r % bound

    def shuffle(self, items: list) -> None:
        """In-place Fisher-Yates shuffle, descending index order."""
        for i in range(len(items) - 1, 0, -1):
            j = self.next_below(i + 1)
            items[i], items[j] = items[j], items[i]


def make_fold_plan(n_instances: int, k: int, seed: int) -> tuple[FoldPlan, list[int]]:
    """Shuffle instances and chunk them into k folds of near-equal size.

    Returns the fold plan plus the shuffled instance order. The first
    ``n mod k`` folds receive the extra instance.
    """
    if k < 2 or k > n_instances:
        raise DataValidationError(f"k must satisfy 2 <= k <= n; got k={k}, n={n_instances}")
    order = list(range(n_instances))
    SplitMix64(seed).shuffle(order)
    base, extra = divmod(n_instances, k)
    assignments = np.empty(n_instances, dtype=np.intp)
    pos = 0
    for fold in range(k):
        size = base + (1 if fold < extra else 0)
        for j in range(pos, pos + size):
            assignments[order[j]] = fold
        pos += size
    return FoldPlan(k, assignments), order


def kfold_split(dataset: Dataset, k: int, seed: int) -> list[tuple[Dataset, Dataset]]:
    """Split a dataset into k (val, eval) pairs.

    Pair ``i`` uses fold ``i`` as the eval subset and the union of the
    remaining folds as the val subset; rows keep the shuffled order.
    The same seed always reproduces the same split.
    """
    plan, order = make_fold_plan(dataset.n_instances, k, seed)
    fold_of = plan.assignments
    pairs = []
    for fold in range(k):
        eval_idx = [i for i in order if fold_of[i] == fold]
        val_idx = [i for i in order if fold_of[i] != fold]
        pairs.append((dataset.subset(val_idx), dataset.subset(eval_idx)))
    return pairs
