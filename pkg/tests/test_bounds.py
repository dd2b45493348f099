"""Tests for the bound calculators, each against an independent oracle."""

import math
from fractions import Fraction

import numpy as np
import pytest

from htcompress.bounds import (
    ConcentrationParams,
    CushionSet,
    GenBoundInput,
    SparsityBoundInput,
    binomial_tail_exact,
    bracket_nonzero_prob,
    concentration_tail,
    contour_grid,
    covering_kappa,
    dudley_integral,
    grid_rows,
    resilient_path_bound,
    simple_generalization_bound,
    solve_variance_t,
    sparsity_tail_bound,
    spiked_component_expectation,
)
from htcompress.errors import (
    DomainError,
    InfeasibleThresholdError,
    ValidityError,
)
from htcompress.powerlaw import ParetoParams, tail_probability


def exact_binomial_tail(n: int, p: Fraction, k: int) -> Fraction:
    """Enumeration oracle with exact rational arithmetic."""
    total = Fraction(0)
    for i in range(k, n + 1):
        total += math.comb(n, i) * p**i * (1 - p) ** (n - i)
    return total


class TestSolveVariance:
    def test_paper_mode_example(self):
        eta = 3.0 * math.exp(-2.0)  # log(3/eta) = 2
        assert solve_variance_t(1.0, eta, 0.5, mode="paper") == pytest.approx(0.25)

    def test_conservative_mode_example(self):
        eta = 3.0 * math.exp(-2.0)
        assert solve_variance_t(1.0, eta, 0.4, mode="conservative") == pytest.approx(0.09)

    def test_infeasible_reports_max_tau(self):
        with pytest.raises(InfeasibleThresholdError) as exc:
            solve_variance_t(0.1, 0.1, 1.0, mode="paper")
        assert exc.value.max_feasible_tau == pytest.approx(0.1 / math.sqrt(math.log(30.0)))

    def test_params_lambda_identity(self):
        params = ConcentrationParams.solve(1.0, 3.0 * math.exp(-2.0), 0.5, mode="paper")
        assert params.lam == pytest.approx(2.0 / (0.5**2 + params.t))
        # paper mode realizes lambda = 2 log(3/eta) / eps^2
        assert params.lam == pytest.approx(2.0 * 2.0 / 1.0)


class TestConcentrationTail:
    def test_vacuous_at_zero(self):
        assert concentration_tail(0.0, 1.0, 1.0, 0.0) == 1.0

    def test_clamped(self):
        # raw value 3 e^{-1} > 1 gets clamped
        assert concentration_tail(1.0, 1.0, math.sqrt(0.5), 0.0) == 1.0

    def test_plug_in(self):
        value = concentration_tail(2.0, 1.0, math.sqrt(0.5), 0.0)
        assert value == pytest.approx(3.0 * math.exp(-4.0))

    def test_probe_norm_identity_and_guarantee(self):
        # |u v^T|_F = |u||v|, and with the conservative variance the bound
        # lands exactly on the failure target
        rng = np.random.default_rng(2)
        u = rng.standard_normal(6)
        v = rng.standard_normal(9)
        outer_frob = float(np.sqrt(np.sum(np.outer(u, v) ** 2)))
        norms = float(np.linalg.norm(u) * np.linalg.norm(v))
        assert outer_frob == pytest.approx(norms, rel=1e-12)
        epsilon, eta, tau = 0.8, 0.05, 0.1
        t = solve_variance_t(epsilon, eta, tau, mode="conservative")
        s = epsilon * norms
        assert concentration_tail(s, norms, tau, t) <= eta + 1e-12


class TestSparsityBound:
    def test_arithmetic_example(self):
        value = sparsity_tail_bound(SparsityBoundInput(n=4, p=0.5, k=3))
        assert value == pytest.approx(16.0 / 27.0, abs=1e-12)

    def test_k_equals_n(self):
        assert sparsity_tail_bound(SparsityBoundInput(n=4, p=0.5, k=4)) == pytest.approx(0.0625)

    def test_validity_region(self):
        with pytest.raises(ValidityError):
            SparsityBoundInput(n=10, p=0.5, k=5)

    def test_dominates_exact_on_grid(self):
        for n in range(1, 31):
            for p in (0.1, 0.3, 0.5, 0.9):
                k_lo = math.floor(n * p) + 1
                for k in range(k_lo, n + 1):
                    if k <= n * p:
                        continue
                    bound = sparsity_tail_bound(SparsityBoundInput(n=n, p=p, k=k))
                    exact = binomial_tail_exact(n, p, k)
                    assert bound >= exact - 1e-12

    def test_large_instance_stays_probabilistic(self):
        p = tail_probability(ParetoParams(2.0, 1.0), 10.0)
        bound = sparsity_tail_bound(SparsityBoundInput(n=10**4, p=p, k=200))
        exact = binomial_tail_exact(10**4, p, 200)
        assert 0.0 <= bound <= 1.0
        assert bound >= exact


class TestBinomialTailExact:
    def test_enumeration_example(self):
        assert binomial_tail_exact(4, 0.5, 3) == pytest.approx(0.3125, abs=1e-14)

    def test_k_zero(self):
        assert binomial_tail_exact(7, 0.3, 0) == 1.0

    def test_against_rational_oracle(self):
        oracle = float(exact_binomial_tail(30, Fraction(3, 10), 15))
        value = binomial_tail_exact(30, 0.3, 15)
        assert abs(value - oracle) / oracle <= 1e-12

    def test_monotone_in_p(self):
        values = [binomial_tail_exact(20, p, 8) for p in np.linspace(0.05, 0.95, 15)]
        assert all(a <= b + 1e-15 for a, b in zip(values, values[1:]))

    def test_monotone_in_k(self):
        values = [binomial_tail_exact(20, 0.4, k) for k in range(21)]
        assert all(a >= b - 1e-15 for a, b in zip(values, values[1:]))


class TestSpikedExpectation:
    def test_unit_vector(self):
        value = spiked_component_expectation(ParetoParams(3.0, 1.0), 2.0, [1.0])
        assert value == pytest.approx(1.5)

    def test_constant_vector_matches_scaled_form(self):
        # for x = ones(10) the general sum collapses to N2 * moment * x_i^2
        value = spiked_component_expectation(ParetoParams(3.0, 1.0), 2.0, np.ones(10))
        assert value == pytest.approx(15.0)

    def test_divergent_exponent(self):
        with pytest.raises(DomainError):
            spiked_component_expectation(ParetoParams(2.0, 1.0), 2.0, [1.0])

    def test_scaling_is_quadratic(self):
        params = ParetoParams(3.0, 1.0)
        x = np.array([0.5, -1.0, 2.0])
        assert spiked_component_expectation(params, 2.0, 2.0 * x) == pytest.approx(
            4.0 * spiked_component_expectation(params, 2.0, x)
        )


class TestBracketProbability:
    def test_reference_value(self):
        import mpmath

        expected = float(
            (mpmath.sin(mpmath.pi / 2) * mpmath.gamma(1) / mpmath.pi)
            * (1 - mpmath.mpf("1.3") ** -1)
        )
        assert bracket_nonzero_prob(1.0, 1.3, 1) == pytest.approx(expected, abs=1e-12)
        assert bracket_nonzero_prob(1.0, 1.3, 1) == pytest.approx(0.0734561, abs=1e-6)

    def test_ratio_law(self):
        p1 = bracket_nonzero_prob(1.2, 1.3, 2)
        p2 = bracket_nonzero_prob(1.2, 1.3, 3)
        assert p2 / p1 == pytest.approx(1.3**-1.2)

    def test_large_scale_limit(self):
        assert bracket_nonzero_prob(1.0, 1e9, 1) == pytest.approx(1.0 / math.pi, rel=1e-8)

    def test_scale_domain(self):
        with pytest.raises(DomainError):
            bracket_nonzero_prob(1.0, 1.0, 1)


class TestResilientPathBound:
    def test_boundary_kappa_equals_n(self):
        # choose parameters with c**(M-i) == N exactly: c=2, M-i=3, N=8
        p = bracket_nonzero_prob(1.9, 2.0, 4)
        assert 8 * p < 8
        value = resilient_path_bound(1.9, 2.0, M=7, N=8, bracket_i=4)
        assert value == pytest.approx(p**8)

    def test_validity_error_reports_mean(self):
        with pytest.raises(ValidityError) as exc:
            resilient_path_bound(1.0, 1.3, M=5, N=64, bracket_i=3)
        assert "N*p" in str(exc.value)

    def test_dominates_rounded_exact(self):
        alpha, c, M, N, i = 1.9, 1.3, 5, 64, 1
        p = bracket_nonzero_prob(alpha, c, i)
        kappa = c ** (M - i)
        assert kappa > N * p
        bound = resilient_path_bound(alpha, c, M, N, i)
        exact = binomial_tail_exact(N, p, math.ceil(kappa))
        assert bound >= exact

    def test_monotone_in_alpha_via_p(self):
        baseline = bracket_nonzero_prob(1.8, 1.3, 1)
        higher = bracket_nonzero_prob(1.9, 1.3, 1)
        assert higher < baseline
        assert resilient_path_bound(1.9, 1.3, 5, 64, 1) <= resilient_path_bound(1.8, 1.3, 5, 64, 1)


class TestContourGrid:
    def test_reference_parameters_complete(self):
        cells = contour_grid(
            alphas=np.linspace(0.1, 1.9, 10), brackets=range(1, 6), scale_c=1.3, M=5, N=64
        )
        assert len(cells) == 50
        valid = [cell for cell in cells if cell.valid]
        assert valid, "expected at least one valid cell at these parameters"
        for cell in valid:
            assert 0.0 <= cell.bound <= 1.0
        for cell in cells:
            if not cell.valid:
                assert math.isnan(cell.bound) and cell.reason

    def test_single_cell_matches_scalar(self):
        cells = contour_grid([1.9], [1], scale_c=1.3, M=5, N=64)
        assert cells[0].bound == resilient_path_bound(1.9, 1.3, 5, 64, 1)

    def test_valid_cells_dominate_exact(self):
        cells = contour_grid(
            alphas=np.linspace(0.1, 1.9, 10), brackets=range(1, 6), scale_c=1.3, M=5, N=64
        )
        for cell in cells:
            if cell.valid:
                exact = binomial_tail_exact(64, cell.p, math.ceil(cell.kappa))
                assert cell.bound >= exact

    def test_rows_schema(self):
        rows = grid_rows(contour_grid([1.9], [1, 2], 1.3, 5, 64))
        assert set(rows[0]) == {"alpha", "bracket", "p", "kappa_count", "bound", "valid"}


class TestSimpleBound:
    def test_arithmetic_example(self):
        result = simple_generalization_bound(
            GenBoundInput(k_per_layer=(100,), m=10**6, margin_loss=0.05, r=256, constant_C=1.0)
        )
        assert result.total == pytest.approx(0.05 + math.sqrt(100 * math.log(256) / 10**6))
        assert result.total == pytest.approx(0.07355, abs=1e-4)

    def test_zero_sparsity(self):
        result = simple_generalization_bound(
            GenBoundInput(k_per_layer=(0, 0), m=100, margin_loss=0.2)
        )
        assert result.total == 0.2

    def test_doubling_m(self):
        a = simple_generalization_bound(GenBoundInput((50,), 1000, 0.0))
        b = simple_generalization_bound(GenBoundInput((50,), 2000, 0.0))
        assert b.complexity_term == pytest.approx(a.complexity_term / math.sqrt(2.0))

    def test_doubling_q(self):
        a = simple_generalization_bound(GenBoundInput((50,), 1000, 0.0))
        b = simple_generalization_bound(GenBoundInput((50, 50), 1000, 0.0))
        assert b.complexity_term == pytest.approx(a.complexity_term * math.sqrt(2.0))

    def test_alphabet_domain(self):
        with pytest.raises(DomainError):
            simple_generalization_bound(GenBoundInput((1,), 10, 0.0, r=1))


class TestCoveringKappa:
    def _cushions(self, mu=(1.0,), c=1.0, f_max=1.0):
        return CushionSet(
            mu_per_layer=mu,
            mu_min_interlayer=tuple(1.0 for _ in mu),
            contraction_c=c,
            depth_d=len(mu),
            f_max=f_max,
        )

    def test_unit_case(self):
        assert covering_kappa(self._cushions()) == pytest.approx(math.e**2)

    def test_product_law(self):
        base = covering_kappa(self._cushions(mu=(0.5, 0.8)))
        halved = covering_kappa(self._cushions(mu=(0.25, 0.8)))
        assert halved == pytest.approx(2.0 * base)

    def test_zero_cushion(self):
        with pytest.raises(DomainError):
            covering_kappa(self._cushions(mu=(0.0,)))


def trapezoid_oracle(q: float, kappa: float, D: float, points: int = 10**6) -> float:
    """Log-spaced trapezoid on [1e-9 D, D]; independent of the quadrature path."""
    a = 1e-9 * D
    eps = np.logspace(math.log10(a), math.log10(D), points)
    values = np.sqrt(q * np.log(2.0 * q * kappa / eps))
    return float(np.trapezoid(values, eps))


class TestDudleyIntegral:
    def test_slowly_varying_approximation(self):
        q, kappa, D = 1.0, 1e20, 1e-6
        approx = D * math.sqrt(math.log(2.0 * kappa / D))
        assert dudley_integral(q, kappa, D) == pytest.approx(approx, rel=0.01)

    def test_monotone_in_upper_limit(self):
        values = [dudley_integral(3.0, 100.0, d) for d in (0.5, 1.0, 2.0, 4.0)]
        assert all(a < b for a, b in zip(values, values[1:]))

    def test_against_trapezoid_oracle(self):
        rng = np.random.default_rng(77)
        for _ in range(10):
            q = float(rng.integers(1, 500))
            kappa = float(10 ** rng.uniform(1, 6))
            D = float(rng.uniform(0.01, 0.9) * 2.0 * q * kappa)
            value = dudley_integral(q, kappa, D)
            oracle = trapezoid_oracle(q, kappa, D)
            assert abs(value - oracle) / oracle <= 1e-6

    def test_domain_error_beyond_log_region(self):
        with pytest.raises(DomainError):
            dudley_integral(1.0, 1.0, 2.0)
