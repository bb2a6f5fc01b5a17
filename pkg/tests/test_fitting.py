import math

import numpy as np
import pytest
from scipy.integrate import quad

from src.core.exceptions import InsufficientDataError
from src.core.models import FitModelKind, Weighting
from src.core.series import IntervalHistogram
from src.analysis.fitting import FitModel, FitResult, fit, fit_curve, model_eval, two_state_component
from src.analysis.units import angular_per_ms_to_hz, gamma_rate_to_per_ms, gamma_time_to_ms, hz_to_gamma


def centers(width: float, count: int) -> np.ndarray:
    return width * (np.arange(count) + 0.5)


class TestClosedForms:
    def test_two_state_vanishes_at_shift(self):
        m = FitModel(FitModelKind.TWO_STATE, (1000.0, 0.025, 0.0083, 15.0))
        assert model_eval(m, 30.0) == 0.0
        assert model_eval(m, 10.0) == 0.0
        assert model_eval(m, 31.0) > 0.0

    def test_exponential_ratio(self):
        m = FitModel(FitModelKind.EXPONENTIAL, (1.0, 0.7))
        assert model_eval(m, 0.0) / model_eval(m, 1.0) == pytest.approx(2.0138, abs=1e-4)

    def test_damped_sine_at_zero(self):
        m = FitModel(FitModelKind.DAMPED_SINE, (3.0, 0.26, 1.88, math.pi / 2))
        assert m(0.0) == pytest.approx(6.0)

    def test_gaussian_peak(self):
        m = FitModel(FitModelKind.GAUSSIAN_PEAK, (56.0, 0.5, 3.3))
        assert m(3.3) == pytest.approx(56.0)
        assert m(4.3) == pytest.approx(56.0 * math.exp(-0.5))

    def test_two_state_symmetric_in_rates(self):
        t = np.linspace(0.0, 500.0, 101)
        a = model_eval(FitModel(FitModelKind.TWO_STATE, (1.0, 0.025, 0.0083, 15.0)), t)
        b = model_eval(FitModel(FitModelKind.TWO_STATE, (1.0, 0.0083, 0.025, 15.0)), t)
        assert np.allclose(a, b, rtol=1e-12, atol=0.0)
        assert np.all(a >= 0.0)

    def test_two_state_degenerate_limit(self):
        t = np.linspace(0.0, 800.0, 81)
        limit = model_eval(FitModel(FitModelKind.TWO_STATE, (1.0, 0.01, 0.01, 5.0)), t)
        near = model_eval(FitModel(FitModelKind.TWO_STATE, (1.0, 0.01 * (1 + 1e-6), 0.01, 5.0)), t)
        assert np.allclose(limit, near, rtol=1e-5, atol=1e-15)

    def test_wrong_parameter_count(self):
        with pytest.raises(ValueError):
            FitModel(FitModelKind.EXPONENTIAL, (1.0, 2.0, 3.0))

    def test_params_are_named(self):
        m = FitModel(FitModelKind.TWO_STATE, (1.0, 0.025, 0.0083, 15.0))
        assert m.params == {"C": 1.0, "gamma1": 0.025, "gamma2": 0.0083, "t0": 15.0}


class TestComponents:
    def test_before_dead_time(self):
        assert two_state_component(1, 4.0, 0.025, 15.0) == 0.0

    def test_at_dead_time(self):
        assert two_state_component(2, 15.0, 0.0083, 15.0) == pytest.approx(0.0083)

    @pytest.mark.parametrize("gamma_i", [0.025, 0.0083])
    def test_normalised(self, gamma_i):
        total, _ = quad(lambda t: two_state_component(1, t, gamma_i, 15.0), 15.0, 15.0 + 50.0 / gamma_i)
        assert total == pytest.approx(1.0, abs=1e-6)

    def test_bad_index(self):
        with pytest.raises(ValueError):
            two_state_component(3, 1.0, 0.1, 0.0)


def assert_recovered(result, truth, rel=0.01):
    for got, want in zip(result.theta, truth):
        assert got == pytest.approx(want, rel=rel)


class TestRoundTrips:
    def test_exponential(self):
        truth = (1000.0, 0.02)
        x = centers(5.0, 200)
        result = fit_curve(FitModelKind.EXPONENTIAL, x, model_eval(FitModel(FitModelKind.EXPONENTIAL, truth), x))
        assert_recovered(result, truth)
        assert result.converged

    def test_exponential_poisson_weighted(self):
        truth = (1000.0, 0.02)
        x = centers(5.0, 200)
        y = model_eval(FitModel(FitModelKind.EXPONENTIAL, truth), x)
        result = fit_curve(FitModelKind.EXPONENTIAL, x, y, weighting=Weighting.POISSON)
        assert_recovered(result, truth)
        assert result.weighting == Weighting.POISSON

    def test_two_state(self):
        truth = (5.0e4, 0.025, 0.0083, 15.0)
        x = centers(5.0, 300)
        y = model_eval(FitModel(FitModelKind.TWO_STATE, truth), x)
        result = fit_curve(FitModelKind.TWO_STATE, x, y, starts=8, seed=1)
        assert_recovered(result, truth)
        assert result.params["gamma1"] >= result.params["gamma2"]

    def test_damped_sine(self):
        truth = (500.0, 0.005, 2 * math.pi / 100.0, math.pi / 2)
        x = centers(5.0, 200)
        y = model_eval(FitModel(FitModelKind.DAMPED_SINE, truth), x)
        assert_recovered(fit_curve(FitModelKind.DAMPED_SINE, x, y), truth)

    def test_gaussian_peak(self):
        truth = (800.0, 1.0 / (2 * 30.0 ** 2), 200.0)
        x = centers(5.0, 120)
        y = model_eval(FitModel(FitModelKind.GAUSSIAN_PEAK, truth), x)
        assert_recovered(fit_curve(FitModelKind.GAUSSIAN_PEAK, x, y), truth)

    def test_two_state_does_not_beat_exponential_on_exponential_data(self):
        x = centers(5.0, 200)
        y = model_eval(FitModel(FitModelKind.EXPONENTIAL, (1000.0, 0.02)), x)
        exp_fit = fit_curve(FitModelKind.EXPONENTIAL, x, y)
        two_fit = fit_curve(FitModelKind.TWO_STATE, x, y)
        assert two_fit.residual_ss >= exp_fit.residual_ss - 1e-6


class TestFitBehaviour:
    def test_too_few_bins(self):
        with pytest.raises(InsufficientDataError):
            fit_curve(FitModelKind.EXPONENTIAL, np.arange(5.0), np.array([0.0, 3.0, 0.0, 1.0, 0.0]))

    def test_deterministic(self):
        x = centers(5.0, 100)
        y = np.round(model_eval(FitModel(FitModelKind.TWO_STATE, (3000.0, 0.03, 0.01, 10.0)), x))
        a = fit_curve(FitModelKind.TWO_STATE, x, y, starts=4, seed=7)
        b = fit_curve(FitModelKind.TWO_STATE, x, y, starts=4, seed=7)
        assert a.theta == b.theta

    def test_more_starts_never_worse(self):
        x = centers(5.0, 100)
        rng = np.random.default_rng(2)
        y = rng.poisson(model_eval(FitModel(FitModelKind.TWO_STATE, (3000.0, 0.03, 0.01, 10.0)), x)).astype(float)
        one = fit_curve(FitModelKind.TWO_STATE, x, y, starts=1, seed=3)
        many = fit_curve(FitModelKind.TWO_STATE, x, y, starts=6, seed=3)
        assert many.objective <= one.objective

    def test_histogram_entry_point(self):
        counts = np.round(model_eval(FitModel(FitModelKind.EXPONENTIAL, (400.0, 0.05)), centers(5.0, 60)))
        h = IntervalHistogram(bin_width=5.0, bin_edges=5.0 * np.arange(61), counts=counts.astype(int),
                              total_events=int(counts.sum()) + 1)
        result = fit(FitModelKind.EXPONENTIAL, h)
        assert result.params["lam"] == pytest.approx(0.05, rel=0.05)
        text = result.to_text()
        assert text.startswith("model=exponential\n")
        assert "lam=" in text and "residual_ss=" in text


class TestUnits:
    def test_oscillation_frequency(self):
        assert angular_per_ms_to_hz(1.88) == pytest.approx(300.0, rel=0.01)

    def test_gamma_units_to_laboratory(self):
        gamma_hz = 2 * math.pi * 6e6
        assert gamma_rate_to_per_ms(hz_to_gamma(700.0, gamma_hz), gamma_hz) == pytest.approx(0.7)
        assert gamma_time_to_ms(gamma_hz * 2e-3, gamma_hz) == pytest.approx(2.0)

    def test_fit_report_in_laboratory_units(self):
        result = FitResult(kind=FitModelKind.TWO_STATE, theta=(100.0, 0.02, 0.01, 15.0),
                           residual_ss=1.0, objective=1.0, converged=True, iterations=10)
        text = result.to_text(gamma_hz=1000.0)
        assert "gamma1_per_ms=0.02\n" in text
        assert "gamma2_per_ms=0.01\n" in text
        assert "t0_ms=15\n" in text
        assert "C_per_ms" not in text
        assert "_ms" not in result.to_text()
