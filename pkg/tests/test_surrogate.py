"""Surrogate gradient: frozen values, symmetry, chain rule, gradcheck."""

import numpy as np
import pytest

from f1thresh.exceptions import DegenerateDenominatorError
from f1thresh.metrics import Metric, binarize, f1_at_thresholds
from f1thresh.surrogate import (
    GradCheckResult,
    chain_from_coefficients,
    f1_grad_wrt_pred,
    finite_diff_grad,
    relaxed_f1,
    relaxed_f1_grad,
    run_gradient_check,
    sigmoid,
    surrogate_derivative,
    surrogate_f1_grad,
    _grad_coefficients,
)

# arbitrary-precision references, rounded to float64
SIG_01_50 = 0.9933071490757151
SD_N01_50 = 0.33240283353950775
CHAIN_1X1 = -0.6648056670790155


class TestSigmoid:
    def test_frozen_value(self):
        assert sigmoid(0.1, 50.0) == pytest.approx(SIG_01_50, abs=1e-13)

    def test_midpoint(self):
        assert sigmoid(0.0, 50.0) == 0.5
        assert sigmoid(0.0) == 0.5

    def test_saturation_without_overflow(self):
        assert sigmoid(100.0, 50.0) == 1.0
        assert sigmoid(-100.0, 50.0) == 0.0

    def test_complement(self):
        for x in (-2.0, -0.3, 0.0, 0.7, 3.0):
            assert sigmoid(x, 7.0) + sigmoid(-x, 7.0) == pytest.approx(1.0, abs=1e-15)

    def test_array_input(self):
        out = sigmoid(np.array([-1.0, 0.0, 1.0]), 2.0)
        assert out.shape == (3,)
        assert np.all(np.diff(out) > 0)

    def test_rejects_bad_slope(self):
        with pytest.raises(ValueError):
            sigmoid(0.0, 0.0)
        with pytest.raises(ValueError):
            sigmoid(0.0, -3.0)


class TestSurrogateDerivative:
    def test_frozen_value(self):
        assert surrogate_derivative(-0.1, 50.0) == pytest.approx(SD_N01_50, abs=1e-13)

    @pytest.mark.parametrize("slope,peak", [(20.0, 5.0), (50.0, 12.5), (100.0, 25.0)])
    def test_peak_at_origin(self, slope, peak):
        assert surrogate_derivative(0.0, slope) == peak

    def test_even_function(self):
        xs = np.array([-0.9, -0.25, -0.01, 0.01, 0.25, 0.9])
        d = surrogate_derivative(xs, 30.0)
        assert np.array_equal(d, d[::-1])

    def test_positive_everywhere(self):
        xs = np.linspace(-5, 5, 101)
        assert np.all(surrogate_derivative(xs, 50.0) > 0)

    def test_no_overflow_far_out(self):
        d = surrogate_derivative(np.array([-1e6, 1e6]), 100.0)
        assert np.all(np.isfinite(d))
        assert np.all(d >= 0)

    def test_matches_sigmoid_product_form(self):
        # same function written as slope * sig(z) * (1 - sig(z))
        xs = np.linspace(-0.5, 0.5, 41)
        a = 20.0
        s = sigmoid(xs, a)
        assert surrogate_derivative(xs, a) == pytest.approx(a * s * (1 - s), abs=1e-12)

    def test_scaling_structure(self):
        # d(x, a) = a * f(a * x), so halving x while doubling a doubles it
        xs = np.array([0.02, 0.1, 0.4])
        a = 25.0
        assert surrogate_derivative(xs / 2, 2 * a) == pytest.approx(
            2 * surrogate_derivative(xs, a), rel=1e-12
        )


class TestF1GradWrtPred:
    def test_worked_example_micro(self):
        truth = np.array([[1.0, 0.0], [1.0, 1.0]])
        pred = np.array([[1.0, 0.0], [0.0, 1.0]])
        # T=2, S=5: entries are 2/S - 2T/S^2 = 0.24 at y=1, -2T/S^2 = -0.16 at y=0
        g = f1_grad_wrt_pred(pred, truth, "micro")
        expect = np.array([[0.24, -0.16], [0.24, 0.24]])
        assert g == pytest.approx(expect, abs=1e-15)

    def test_matches_finite_difference_on_fractional_preds(self):
        rng = np.random.default_rng(5)
        h = 1e-6
        for metric in ("micro", "macro"):
            for _ in range(20):
                truth = (rng.random((4, 3)) < 0.5).astype(np.float64)
                if truth.sum() == 0:
                    truth[0, 0] = 1.0
                pred = rng.uniform(0.05, 0.95, (4, 3))
                g = f1_grad_wrt_pred(pred, truth, metric)
                from f1thresh.metrics import f1_score

                for n in range(4):
                    for l in range(3):
                        hi = pred.copy()
                        lo = pred.copy()
                        hi[n, l] += h
                        lo[n, l] -= h
                        fd = (f1_score(hi, truth, metric) - f1_score(lo, truth, metric)) / (2 * h)
                        assert g[n, l] == pytest.approx(fd, abs=1e-6)

    def test_micro_degenerate_raises(self):
        z = np.zeros((2, 2))
        with pytest.raises(DegenerateDenominatorError):
            f1_grad_wrt_pred(z, z, "micro")

    def test_macro_empty_class_gets_zero_gradient(self):
        truth = np.array([[1.0, 0.0], [0.0, 0.0]])
        pred = np.array([[1.0, 0.0], [0.0, 0.0]])
        g = f1_grad_wrt_pred(pred, truth, "macro")
        assert np.all(g[:, 1] == 0.0)
        assert np.any(g[:, 0] != 0.0)


class TestSurrogateF1Grad:
    def test_frozen_1x1_chain(self):
        g = surrogate_f1_grad(
            np.array([[0.4]]), np.array([0.5]), np.array([[1.0]]), 50.0, "micro"
        )
        assert g.shape == (1,)
        assert float(g[0]) == pytest.approx(CHAIN_1X1, abs=1e-13)
        # score sits below the threshold of its positive: pushing the
        # threshold up must lower the surrogate objective
        assert g[0] < 0

    def test_single_class_macro_equals_micro(self):
        rng = np.random.default_rng(13)
        for _ in range(25):
            scores = rng.random((12, 1))
            truth = (rng.random((12, 1)) < 0.5).astype(np.float64)
            if truth.sum() == 0:
                truth[0, 0] = 1.0
            t = rng.uniform(0.1, 0.9, 1)
            a = surrogate_f1_grad(scores, t, truth, 50.0, "micro")
            b = surrogate_f1_grad(scores, t, truth, 50.0, "macro")
            assert np.array_equal(a, b)

    def test_saturation_far_from_thresholds(self):
        # every |score - threshold| >= 0.5 at slope 50 leaves only
        # exp(-25)-sized terms in the chain
        scores = np.array([[0.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
        truth = np.array([[0.0, 1.0], [0.0, 1.0], [1.0, 0.0]])
        t = np.array([0.5, 0.5])
        for metric in ("micro", "macro"):
            g = surrogate_f1_grad(scores, t, truth, 50.0, metric)
            assert np.all(np.abs(g) < 1e-6)

    def test_coefficient_path_equals_matrix_path(self):
        rng = np.random.default_rng(31)
        for metric in (Metric.MICRO, Metric.MACRO):
            for _ in range(30):
                n = int(rng.integers(2, 30))
                c = int(rng.integers(1, 6))
                scores = rng.random((n, c))
                truth = (rng.random((n, c)) < 0.4).astype(np.float64)
                if truth.sum() == 0:
                    truth[0, 0] = 1.0
                t = rng.uniform(0.0, 1.0, c)
                pred = binarize(scores, t)
                gp = f1_grad_wrt_pred(pred, truth, metric)
                sd = surrogate_derivative(scores - t[None, :], 50.0)
                matrix = -np.sum(gp * sd, axis=0)
                fused = surrogate_f1_grad(scores, t, truth, 50.0, metric)
                assert fused == pytest.approx(matrix, rel=1e-12, abs=1e-15)

    def test_chain_from_coefficients_is_the_public_grad(self):
        rng = np.random.default_rng(37)
        scores = rng.random((20, 4))
        truth = (rng.random((20, 4)) < 0.4).astype(np.float64)
        t = rng.uniform(0.2, 0.8, 4)
        pred = binarize(scores, t)
        tp = np.einsum("nc,nc->c", pred, truth)
        s = truth.sum(axis=0) + pred.sum(axis=0)
        for metric in (Metric.MICRO, Metric.MACRO):
            lin, const = _grad_coefficients(tp, s, 4, metric)
            g = chain_from_coefficients(scores, t, truth, 50.0, lin, const)
            assert np.array_equal(g, surrogate_f1_grad(scores, t, truth, 50.0, metric))


class TestRelaxedF1:
    def test_approaches_hard_f1_when_scores_are_far(self):
        rng = np.random.default_rng(41)
        scores = np.where(rng.random((30, 3)) < 0.5, 0.1, 0.9)
        truth = (rng.random((30, 3)) < 0.5).astype(np.float64)
        t = np.full(3, 0.5)
        for metric in ("micro", "macro"):
            hard = f1_at_thresholds(scores, t, truth, metric)
            soft = relaxed_f1(scores, t, truth, 1000.0, metric)
            assert soft == pytest.approx(hard, abs=1e-9)

    def test_zero_threshold_closed_form(self):
        # thresholds 0, scores >= 0.1, large slope: every relaxed
        # prediction is 1 up to exp(-100), so micro F1 -> 2*sum(y)/(sum(y)+n*c)
        rng = np.random.default_rng(43)
        scores = rng.uniform(0.1, 1.0, (25, 4))
        truth = (rng.random((25, 4)) < 0.3).astype(np.float64)
        t = np.zeros(4)
        got = relaxed_f1(scores, t, truth, 1000.0, "micro")
        expect = 2 * truth.sum() / (truth.sum() + 25 * 4)
        assert got == pytest.approx(expect, abs=1e-9)

    def test_grad_matches_finite_difference(self):
        rng = np.random.default_rng(47)
        scores = rng.random((16, 3))
        truth = (rng.random((16, 3)) < 0.5).astype(np.float64)
        t = rng.uniform(0.2, 0.8, 3)
        for metric in ("micro", "macro"):
            analytic = relaxed_f1_grad(scores, t, truth, 20.0, metric)
            fd = finite_diff_grad(lambda u: relaxed_f1(scores, u, truth, 20.0, metric), t)
            assert analytic == pytest.approx(fd, rel=1e-5, abs=1e-7)


class TestFiniteDiff:
    def test_exact_on_linear_objective(self):
        g = finite_diff_grad(lambda t: 3.0 * t[0] + 2.0 * t[1], np.array([0.4, 0.6]))
        assert g == pytest.approx([3.0, 2.0], abs=1e-8)

    def test_rejects_zero_step(self):
        with pytest.raises(ValueError):
            finite_diff_grad(lambda t: float(t.sum()), np.array([0.5]), step=0.0)


class TestGradientCheck:
    def test_default_run_passes(self):
        res = run_gradient_check(trials=60, seed=0)
        assert isinstance(res, GradCheckResult)
        assert res.passed
        assert res.failures == 0
        assert res.coordinates > 0
        assert np.isfinite(res.worst_rel_err)

    def test_zero_trials_is_vacuous(self):
        res = run_gradient_check(trials=0)
        assert res.passed
        assert res.coordinates == 0

    def test_impossible_tolerance_fails(self):
        res = run_gradient_check(trials=30, tolerance=1e-16, abs_floor=1e-18, seed=0)
        assert not res.passed
        assert res.failures > 0

    def test_deterministic_for_seed(self):
        a = run_gradient_check(trials=40, seed=9)
        b = run_gradient_check(trials=40, seed=9)
        assert (a.worst_rel_err, a.worst_abs_err, a.failures) == (
            b.worst_rel_err,
            b.worst_abs_err,
            b.failures,
        )
