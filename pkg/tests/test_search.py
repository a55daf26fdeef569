"""Search baselines and the exhaustive oracle."""

import numpy as np
import pytest

from f1thresh.data import Dataset, pair_dataset
from f1thresh.exceptions import ResourceGuardError
from f1thresh.metrics import binarize, f1_at_thresholds
from f1thresh.search import (
    DichoConfig,
    NumGradConfig,
    brute_force_oracle,
    candidate_thresholds,
    default_thresholds,
    dicho_fit,
    num_fit,
    numerical_gradient,
)

TWO_POINT = Dataset(np.array([[0.7], [0.4]]), np.array([[1.0], [0.0]]))


def random_dataset(seed, n=60, c=3):
    rng = np.random.default_rng(seed)
    labels = (rng.random((n, c)) < 0.4).astype(np.float64)
    scores = np.clip(0.5 + 0.35 * (2 * labels - 1) + 0.18 * rng.standard_normal((n, c)), 0, 1)
    return Dataset(scores, labels)


class TestDefaultThresholds:
    def test_fills_value(self):
        assert default_thresholds(3, 0.3).tolist() == [0.3, 0.3, 0.3]

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            default_thresholds(2, 1.1)


class TestConfigs:
    def test_dicho_validation(self):
        with pytest.raises(ValueError):
            DichoConfig(coarse_grid=1)
        with pytest.raises(ValueError):
            DichoConfig(stages=0)
        with pytest.raises(ValueError):
            DichoConfig(shrink=1.0)
        with pytest.raises(ValueError):
            DichoConfig(sigma0=0.0)

    def test_numgrad_validation(self):
        with pytest.raises(ValueError):
            NumGradConfig(delta_t=0.0)
        with pytest.raises(ValueError):
            NumGradConfig(max_steps_multiple=0)


class TestNumericalGradient:
    def test_secant_over_first_changing_probe(self):
        # scores 0.7 / 0.4, positive on top: from t=0.625 the prediction
        # first flips at the k=8 probe, so the estimate is -1 / (8 * 0.01)
        cfg = NumGradConfig(delta_t=0.01, max_steps_multiple=10)
        g = numerical_gradient(TWO_POINT, np.array([0.625]), cfg, "micro")
        assert float(g[0]) == pytest.approx(-12.5, rel=1e-12)

    def test_downward_fallback(self):
        # every upward probe from 0.5 is flat; probing down reaches the
        # false positive at 0.4 and reports the slope of that drop
        cfg = NumGradConfig(delta_t=0.01, max_steps_multiple=10)
        g = numerical_gradient(TWO_POINT, np.array([0.5]), cfg, "micro")
        assert float(g[0]) == pytest.approx(10.0 / 3.0, rel=1e-12)

    def test_zero_iff_flat_both_directions(self):
        cfg = NumGradConfig(delta_t=0.01, max_steps_multiple=10)
        g = numerical_gradient(TWO_POINT, np.array([0.2]), cfg, "micro")
        assert float(g[0]) == 0.0

    def test_improvement_wins_over_larger_drop(self):
        # from t=0.35 moving up clears the false positive (improvement);
        # the estimate must use that probe, not any later drop
        cfg = NumGradConfig(delta_t=0.05, max_steps_multiple=10)
        g = numerical_gradient(TWO_POINT, np.array([0.35]), cfg, "micro")
        assert float(g[0]) > 0.0

    def test_matches_bruteforce_recount(self):
        ds = random_dataset(1)
        cfg = NumGradConfig(delta_t=0.02, max_steps_multiple=5)
        t = np.array([0.3, 0.5, 0.7])
        g = numerical_gradient(ds, t, cfg, "macro")
        base = f1_at_thresholds(ds.scores, t, ds.labels, "macro")
        for l in range(3):
            ups, downs = [], []
            for k in range(1, 6):
                for sign, bucket in ((1.0, ups), (-1.0, downs)):
                    moved = t.copy()
                    moved[l] = t[l] + sign * k * 0.02
                    bucket.append(f1_at_thresholds(ds.scores, moved, ds.labels, "macro") - base)
            deltas = np.array(ups)
            offsets = 0.02 * np.arange(1, 6)
            if (deltas > 0).any():
                expect = deltas[np.argmax(deltas)] / offsets[np.argmax(deltas)]
            elif (deltas != 0).any():
                k = int(np.argmax(np.abs(deltas)))
                expect = deltas[k] / offsets[k]
            else:
                deltas = np.array(downs)
                if (deltas > 0).any():
                    k = int(np.argmax(deltas))
                    expect = deltas[k] / -offsets[k]
                elif (deltas != 0).any():
                    k = int(np.argmax(np.abs(deltas)))
                    expect = deltas[k] / -offsets[k]
                else:
                    expect = 0.0
            assert g[l] == pytest.approx(expect, rel=1e-9, abs=1e-12)


class TestNumFit:
    def test_deterministic(self):
        ds = random_dataset(5)
        cfg = NumGradConfig(epochs=20)
        a = num_fit(ds, cfg, "micro")
        b = num_fit(ds, cfg, "micro")
        assert np.array_equal(a.thresholds, b.thresholds)
        assert a.trace == b.trace

    def test_trace_length_and_range(self):
        ds = random_dataset(6)
        res = num_fit(ds, NumGradConfig(epochs=15), "macro", init_threshold=0.3)
        assert len(res.trace) == 15
        assert res.epochs_run == 15
        assert np.all((res.thresholds >= 0) & (res.thresholds <= 1))

    def test_separable_single_class_reaches_perfect(self):
        rng = np.random.default_rng(8)
        labels = (rng.random((200, 1)) < 0.5).astype(np.float64)
        scores = np.where(labels == 1.0, rng.uniform(0.55, 1.0, (200, 1)),
                          rng.uniform(0.0, 0.25, (200, 1)))
        ds = Dataset(scores, labels)
        res = num_fit(ds, NumGradConfig(epochs=60), "micro")
        assert res.trace[-1] == 1.0


class TestDichoFit:
    def test_trace_monotone_and_sized(self):
        ds = random_dataset(11)
        cfg = DichoConfig(stages=5)
        for metric in ("micro", "macro"):
            res = dicho_fit(ds, cfg, metric)
            assert len(res.trace) == 6
            assert res.epochs_run == 6
            assert all(b >= a for a, b in zip(res.trace, res.trace[1:]))

    def test_deterministic_per_seed(self):
        ds = random_dataset(12)
        a = dicho_fit(ds, DichoConfig(seed=3), "micro")
        b = dicho_fit(ds, DichoConfig(seed=3), "micro")
        c = dicho_fit(ds, DichoConfig(seed=4), "micro")
        assert np.array_equal(a.thresholds, b.thresholds)
        assert a.trace == b.trace
        assert not np.array_equal(a.thresholds, c.thresholds)

    def test_flat_ties_resolve_to_lowest(self):
        # all labels positive and all scores >= 0.6: every tau below 0.6
        # scores F1 = 1, and the tie rule walks the grid down to 0
        rng = np.random.default_rng(0)
        ds = Dataset(rng.uniform(0.6, 1.0, (30, 2)), np.ones((30, 2)))
        res = dicho_fit(ds, DichoConfig(), "micro")
        assert res.thresholds.tolist() == [0.0, 0.0]
        assert res.trace == [1.0] * 5

    def test_beats_or_matches_default(self):
        for seed in range(4):
            ds = random_dataset(seed, n=80, c=4)
            res = dicho_fit(ds, DichoConfig(), "micro")
            base = f1_at_thresholds(ds.scores, np.full(4, 0.5), ds.labels, "micro")
            assert res.trace[-1] >= base

    def test_respects_init_threshold(self):
        # grid candidates always include the incumbent, so a perfect init
        # can only be kept or improved on
        rng = np.random.default_rng(21)
        labels = (rng.random((50, 2)) < 0.5).astype(np.float64)
        scores = np.where(labels == 1.0, 0.9, 0.1)
        ds = Dataset(scores, labels)
        res = dicho_fit(ds, DichoConfig(), "micro", init_threshold=0.5)
        assert res.trace[0] == 1.0


class TestCandidateThresholds:
    def test_midpoints_plus_endpoints(self):
        col = np.array([0.2, 0.3, 0.9, 0.2])
        cands = candidate_thresholds(col)
        expect = np.unique(np.concatenate(([0.0], [(0.2 + 0.3) / 2, (0.3 + 0.9) / 2], [1.0])))
        assert np.array_equal(cands, expect)

    def test_constant_column(self):
        assert candidate_thresholds(np.array([0.5, 0.5])).tolist() == [0.0, 1.0]

    def test_covers_every_prediction_pattern(self):
        rng = np.random.default_rng(15)
        col = rng.random(9)
        cands = candidate_thresholds(col)
        patterns = {tuple(binarize(col[:, None], np.array([t]))[:, 0]) for t in cands}
        # sweeping tau over [0,1] realizes exactly len(unique)+1 patterns
        sweep = {tuple(binarize(col[:, None], np.array([t]))[:, 0])
                 for t in np.linspace(0, 1, 2001)}
        assert sweep <= patterns


class TestBruteForceOracle:
    def test_exact_1d_frozen_example(self):
        ds = Dataset(np.array([[0.9], [0.8], [0.3], [0.2]]),
                     np.array([[1.0], [1.0], [0.0], [0.0]]))
        res = brute_force_oracle(ds, "micro")
        assert float(res.thresholds[0]) == 0.55
        assert res.trace == [1.0]

    def test_exact_1d_all_positive_prefers_lowest(self):
        ds = Dataset(np.array([[0.9], [0.8], [0.3]]), np.ones((3, 1)))
        res = brute_force_oracle(ds, "micro")
        assert float(res.thresholds[0]) == 0.0
        assert res.trace == [1.0]

    def test_exact_1d_requires_single_class(self):
        ds = random_dataset(1, c=2)
        with pytest.raises(ValueError):
            brute_force_oracle(ds, "micro", mode="exact_1d")

    def test_rejects_unknown_mode(self):
        with pytest.raises(ValueError):
            brute_force_oracle(TWO_POINT, "micro", mode="grid")

    def test_exact_1d_dominates_any_threshold(self):
        for seed in range(6):
            rng = np.random.default_rng(seed)
            labels = (rng.random((40, 1)) < 0.5).astype(np.float64)
            scores = rng.random((40, 1))
            ds = Dataset(scores, labels)
            res = brute_force_oracle(ds, "micro")
            for t in np.linspace(0, 1, 101):
                assert res.trace[-1] >= f1_at_thresholds(scores, np.array([t]), labels, "micro") - 1e-12

    def test_monotone_transform_invariance(self):
        # squaring scores preserves order, so the optimal F1 and the
        # prediction pattern at the optimum are unchanged
        rng = np.random.default_rng(23)
        labels = (rng.random((50, 1)) < 0.4).astype(np.float64)
        scores = rng.random((50, 1))
        a = brute_force_oracle(Dataset(scores, labels), "micro")
        b = brute_force_oracle(Dataset(scores**2, labels), "micro")
        assert a.trace[-1] == b.trace[-1]
        pa = binarize(scores, a.thresholds)
        pb = binarize(scores**2, b.thresholds)
        assert np.array_equal(pa, pb)

    def test_coordinate_mode_matches_exact_1d_for_one_class(self):
        for seed in range(5):
            rng = np.random.default_rng(seed)
            labels = (rng.random((30, 1)) < 0.5).astype(np.float64)
            ds = Dataset(rng.random((30, 1)), labels)
            a = brute_force_oracle(ds, "micro", mode="exact_1d")
            b = brute_force_oracle(ds, "micro", mode="coordinate_exhaustive")
            assert a.trace[-1] == b.trace[-1]

    def test_coordinate_mode_beats_default(self):
        for metric in ("micro", "macro"):
            ds = random_dataset(31, n=40, c=3)
            res = brute_force_oracle(ds, metric, mode="coordinate_exhaustive")
            base = f1_at_thresholds(ds.scores, np.full(3, 0.5), ds.labels, metric)
            assert res.trace[-1] >= base
            assert all(b >= a for a, b in zip(res.trace, res.trace[1:]))

    def test_resource_guard(self):
        rng = np.random.default_rng(2)
        ds = pair_dataset(rng.random((30, 8)), (rng.random((30, 8)) < 0.5).astype(float))
        with pytest.raises(ResourceGuardError):
            brute_force_oracle(ds, "micro", mode="coordinate_exhaustive")
