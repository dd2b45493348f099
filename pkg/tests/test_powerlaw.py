"""Tests for the heavy-tail element model: sampling, tails, moments, fitting."""

import math

import numpy as np
import pytest

from htcompress.errors import DomainError, InsufficientDataError, ValidationError
from htcompress.powerlaw import (
    ParetoParams,
    StableTailParams,
    fit_alpha_mle,
    inverse_tail_probability,
    sample_pareto,
    stable_tail_constant,
    stable_tail_density,
    stddev_floor,
    tail_probability,
    truncated_second_moment,
)


class TestParams:
    def test_rejects_bad_exponent(self):
        with pytest.raises(DomainError):
            ParetoParams(alpha=0.0, w_min=1.0)
        with pytest.raises(DomainError):
            ParetoParams(alpha=2.0, w_min=-1.0)

    def test_density_normalizes(self):
        # quadrature check of the normalization constant
        from scipy.integrate import quad

        params = ParetoParams(alpha=2.5, w_min=0.7)
        density = lambda w: params.alpha * params.w_min**params.alpha * w ** -(params.alpha + 1)
        mass, _ = quad(density, params.w_min, np.inf)
        assert mass == pytest.approx(1.0, abs=1e-10)

    def test_stable_params_domain(self):
        with pytest.raises(DomainError):
            StableTailParams(alpha=2.0, scale_c=1.0)
        with pytest.raises(DomainError):
            StableTailParams(alpha=1.0, scale_c=0.0)


class TestSampling:
    def test_inverse_map_midpoint(self):
        # survival probability 0.5 maps to w_min * 0.5**(-1/alpha)
        assert inverse_tail_probability(ParetoParams(1.0, 1.0), 0.5) == pytest.approx(2.0)

    def test_support_floor(self):
        values = sample_pareto(ParetoParams(1.5, 2.0), 1000, seed=3)
        assert np.all(values >= 2.0)

    def test_symmetrize_signs(self):
        values = sample_pareto(ParetoParams(1.5, 1.0), 4000, seed=3, symmetrize=True)
        assert np.all(np.abs(values) >= 1.0)
        negative = np.mean(values < 0)
        assert 0.45 < negative < 0.55

    def test_empty_request(self):
        with pytest.raises(ValidationError):
            sample_pareto(ParetoParams(1.0, 1.0), 0, seed=0)

    def test_deterministic(self):
        a = sample_pareto(ParetoParams(2.0, 1.0), 500, seed=11, symmetrize=True)
        b = sample_pareto(ParetoParams(2.0, 1.0), 500, seed=11, symmetrize=True)
        np.testing.assert_array_equal(a, b)

    def test_log_mean_matches_exponential_moment(self):
        # log(w / w_min) is exponential with mean 1/alpha
        values = sample_pareto(ParetoParams(2.5, 1.0), 10**5, seed=7)
        assert np.mean(np.log(values)) == pytest.approx(0.4, abs=0.01)

    def test_one_sided_ks_statistic(self):
        params = ParetoParams(2.0, 1.0)
        values = np.sort(sample_pareto(params, 10**5, seed=5))
        cdf = 1.0 - (params.w_min / values) ** params.alpha
        n = values.size
        d_plus = np.max(np.arange(1, n + 1) / n - cdf)
        assert d_plus < 0.01


class TestTailProbability:
    @pytest.mark.parametrize(
        "alpha,w_min,tau,expected",
        [(2.0, 1.0, 10.0, 0.01), (3.0, 2.0, 4.0, 0.125), (5.0, 1.0, 1.0, 1.0)],
    )
    def test_values(self, alpha, w_min, tau, expected):
        assert tail_probability(ParetoParams(alpha, w_min), tau) == pytest.approx(expected)

    def test_below_support(self):
        with pytest.raises(DomainError):
            tail_probability(ParetoParams(2.0, 1.0), 0.5)

    def test_monotone_in_tau_and_alpha(self):
        taus = np.linspace(1.5, 20.0, 25)
        for alpha in (1.5, 2.5, 3.5):
            probs = [tail_probability(ParetoParams(alpha, 1.0), t) for t in taus]
            assert all(a >= b for a, b in zip(probs, probs[1:]))
        for tau in (1.5, 3.0, 10.0):
            probs = [tail_probability(ParetoParams(a, 1.0), tau) for a in (1.0, 2.0, 3.0, 4.0)]
            assert all(a >= b for a, b in zip(probs, probs[1:]))


class TestTruncatedSecondMoment:
    def test_closed_form(self):
        assert truncated_second_moment(ParetoParams(3.0, 1.0), 2.0) == pytest.approx(1.5)

    def test_divergence(self):
        with pytest.raises(DomainError):
            truncated_second_moment(ParetoParams(2.0, 1.0), 2.0)

    def test_monte_carlo_agreement(self):
        params = ParetoParams(3.0, 1.0)
        closed = truncated_second_moment(params, 2.0)
        values = sample_pareto(params, 10**6, seed=13)
        mc = np.mean(np.where(values > 2.0, values**2, 0.0))
        assert abs(mc - closed) / closed < 0.05

    def test_blowup_toward_two(self):
        near = truncated_second_moment(ParetoParams(2.01, 1.0), 2.0)
        far = truncated_second_moment(ParetoParams(3.0, 1.0), 2.0)
        assert near > far


class TestFit:
    def test_exact_small_case(self):
        data = [math.e, math.e**2, math.e**3]
        fit = fit_alpha_mle(data, w_min=1.0)
        assert fit.alpha_hat == pytest.approx(0.5, abs=1e-12)
        assert fit.n_tail == 3
        assert fit.density_exponent == pytest.approx(1.5)

    def test_constant_data_is_degenerate(self):
        with pytest.raises(DomainError):
            fit_alpha_mle([2.0, 2.0, 2.0, 2.0], w_min=2.0)

    def test_insufficient_tail(self):
        with pytest.raises(InsufficientDataError):
            fit_alpha_mle([0.1, 0.2, 5.0], w_min=1.0)

    def test_recovery_window(self):
        values = sample_pareto(ParetoParams(2.5, 1.0), 10**5, seed=21)
        fit = fit_alpha_mle(values, w_min=1.0)
        assert 2.45 <= fit.alpha_hat <= 2.55

    @pytest.mark.parametrize("alpha", [1.5, 2.5, 3.5])
    def test_recovery_within_three_standard_errors(self, alpha):
        n = 10**4
        values = sample_pareto(ParetoParams(alpha, 1.0), n, seed=40)
        fit = fit_alpha_mle(values, w_min=1.0)
        assert abs(fit.alpha_hat - alpha) <= 3.0 * alpha / math.sqrt(n)

    def test_magnitude_fit_ignores_signs(self):
        values = sample_pareto(ParetoParams(2.5, 1.0), 20_000, seed=2)
        signed = sample_pareto(ParetoParams(2.5, 1.0), 20_000, seed=2, symmetrize=True)
        a = fit_alpha_mle(values, w_min=1.0).alpha_hat
        b = fit_alpha_mle(signed, w_min=1.0).alpha_hat
        assert a == pytest.approx(b)

    def test_default_floor_is_magnitude_deviation(self):
        values = sample_pareto(ParetoParams(3.0, 1.0), 5000, seed=9, symmetrize=True)
        fit = fit_alpha_mle(values)
        assert fit.w_min_used == pytest.approx(stddev_floor(values))


class TestStableTail:
    def test_constant_at_one(self):
        assert stable_tail_constant(1.0) == pytest.approx(1.0 / math.pi, abs=1e-15)

    def test_constant_vanishes_at_two(self):
        assert stable_tail_constant(1.9999999) == pytest.approx(0.0, abs=1e-5)

    def test_constant_against_high_precision(self):
        import mpmath

        expected = float(mpmath.sin(mpmath.pi / 4) * mpmath.gamma(mpmath.mpf(1) / 2) / mpmath.pi)
        assert stable_tail_constant(0.5) == pytest.approx(expected, abs=1e-12)

    def test_domain(self):
        for alpha in (0.0, 2.0, -1.0):
            with pytest.raises(DomainError):
                stable_tail_constant(alpha)

    def test_density_plug_in(self):
        assert stable_tail_density(StableTailParams(1.0, 1.0), 1.0) == pytest.approx(1.0 / math.pi)

    def test_density_quartic_scaling(self):
        params = StableTailParams(1.0, 1.0)
        assert stable_tail_density(params, 2.0) == pytest.approx(
            stable_tail_density(params, 1.0) / 4.0
        )

    def test_density_formula_reevaluation(self):
        params = StableTailParams(1.5, 2.0)
        expected = 1.5 * 2.0**1.5 * stable_tail_constant(1.5) * 10.0**-2.5
        assert stable_tail_density(params, 10.0) == expected

    def test_density_domain(self):
        with pytest.raises(DomainError):
            stable_tail_density(StableTailParams(1.0, 1.0), 0.0)
