"""Closed-form bound calculators.

Covers the Gaussian-substitution concentration bound, the Chernoff sparsity
bound with its exact binomial companion, the spiked-component expectation,
scale-bracket (resilience) probabilities and grids, the simple sparsity-count
generalization bound, the covering constant and the entropy integral.

All probability outputs are clamped to [0, 1]; the unclamped value of the
concentration tail can exceed 1 at small deviations because of the constant
factor 3 in the bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, special

from .errors import (
    DomainError,
    InfeasibleThresholdError,
    ValidationError,
    ValidityError,
)
from .powerlaw import ParetoParams, stable_tail_constant, truncated_second_moment

__all__ = [
    "ConcentrationParams",
    "SparsityBoundInput",
    "GenBoundInput",
    "SimpleBoundResult",
    "CushionSet",
    "GridCell",
    "solve_variance_t",
    "concentration_tail",
    "sparsity_tail_bound",
    "binomial_tail_exact",
    "spiked_component_expectation",
    "bracket_nonzero_prob",
    "resilient_path_bound",
    "contour_grid",
    "grid_rows",
    "simple_generalization_bound",
    "covering_kappa",
    "dudley_integral",
]

SOLVE_MODES = ("paper", "conservative")


def _check_error_budget(epsilon: float, eta: float) -> float:
    if not (math.isfinite(epsilon) and epsilon > 0):
        raise DomainError(f"error tolerance must be positive, got {epsilon}")
    if not (0.0 < eta < 1.0):
        raise DomainError(f"failure probability must lie in (0, 1), got {eta}")
    return math.log(3.0 / eta)


def solve_variance_t(epsilon: float, eta: float, tau: float, mode: str = "conservative") -> float:
    """Variance scale that spends the error budget left over by the cutoff.

    ``paper`` mode solves ``tau**2 + t = eps**2 / log(3/eta)`` (the stated
    identity); ``conservative`` mode solves ``tau**2 + t =
    eps**2 / (2 log(3/eta))``, which is what the exponential tail actually
    requires, and is the default guarantee path.
    """
    log_term = _check_error_budget(epsilon, eta)
    if not (math.isfinite(tau) and tau > 0):
        raise DomainError(f"cutoff must be positive, got {tau}")
    if mode not in SOLVE_MODES:
        raise ValidationError(f"unknown mode {mode!r}; expected one of {SOLVE_MODES}")
    budget = epsilon**2 / log_term if mode == "paper" else epsilon**2 / (2.0 * log_term)
    t = budget - tau**2
    if t < 0.0:
        max_tau = math.sqrt(budget)
        raise InfeasibleThresholdError(
            f"cutoff {tau} exceeds the feasible maximum {max_tau:.6g} for "
            f"epsilon={epsilon}, eta={eta} in {mode} mode",
            max_feasible_tau=max_tau,
        )
    return t


@dataclass(frozen=True)
class ConcentrationParams:
    """Error/probability targets with the cutoff and variance that realize them."""

    epsilon: float
    eta: float
    tau: float
    t: float

    def __post_init__(self):
        _check_error_budget(self.epsilon, self.eta)
        if not (self.tau > 0 and self.t >= 0):
            raise DomainError("need tau > 0 and t >= 0")

    @property
    def lam(self) -> float:
        """Exponent scale ``2 / (tau**2 + t)`` of the substitution tail."""
        return 2.0 / (self.tau**2 + self.t)

    @classmethod
    def solve(cls, epsilon: float, eta: float, tau: float, mode: str = "conservative"):
        return cls(epsilon, eta, tau, solve_variance_t(epsilon, eta, tau, mode))


def concentration_tail(s: float, uv_frobenius: float, tau: float, t: float) -> float:
    """Probability bound ``min(1, 3 exp(-s^2 / (2 |uv^T|_F^2 (tau^2 + t))))``.

    Bounds the chance that the bilinear substitution error exceeds ``s``.
    """
    if s < 0:
        raise DomainError(f"deviation must be non-negative, got {s}")
    if uv_frobenius <= 0:
        raise DomainError(f"probe norm must be positive, got {uv_frobenius}")
    raw = 3.0 * math.exp(-(s**2) / (2.0 * uv_frobenius**2 * (tau**2 + t)))
    return min(1.0, raw)


@dataclass(frozen=True)
class SparsityBoundInput:
    """Entry count, per-entry exceedance probability and target sparsity."""

    n: int
    p: float
    k: int

    def __post_init__(self):
        if self.n < 1:
            raise ValidationError(f"entry count must be positive, got {self.n}")
        if not (0.0 < self.p < 1.0):
            raise DomainError(f"exceedance probability must lie in (0, 1), got {self.p}")
        if not (0 <= self.k <= self.n):
            raise ValidationError(f"sparsity target {self.k} outside [0, {self.n}]")
        if self.k <= self.n * self.p:
            raise ValidityError(
                f"sparsity target k={self.k} must exceed the mean n*p={self.n * self.p:.6g}; "
                "the right-tail bound only holds beyond the mean"
            )


def _chernoff_tail_log(n: float, p: float, k: float) -> float:
    """log of ``(np/k)**k * ((1-p)/(1-k/n))**(n-k)``; ``k`` may be real."""
    log_bound = k * (math.log(n * p) - math.log(k))
    if k < n:
        log_bound += (n - k) * (math.log1p(-p) - math.log1p(-k / n))
    return log_bound


def sparsity_tail_bound(inp: SparsityBoundInput) -> float:
    """Chernoff (relative-entropy) bound on ``P(X >= k)`` for the spike count.

    At ``k = n`` the second factor has an empty exponent and the bound is
    ``p**n`` exactly.
    """
    return min(1.0, math.exp(_chernoff_tail_log(inp.n, inp.p, inp.k)))


def binomial_tail_exact(n: int, p: float, k: int) -> float:
    """Exact ``P(X >= k)`` for ``X ~ Binomial(n, p)`` by log-space summation."""
    if not (0 <= k <= n):
        raise ValidationError(f"need 0 <= k <= n, got k={k}, n={n}")
    if not (0.0 <= p <= 1.0):
        raise DomainError(f"probability must lie in [0, 1], got {p}")
    if k == 0:
        return 1.0
    if p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0
    i = np.arange(k, n + 1)
    log_terms = (
        special.gammaln(n + 1)
        - special.gammaln(i + 1)
        - special.gammaln(n - i + 1)
        + i * math.log(p)
        + (n - i) * math.log1p(-p)
    )
    return float(min(1.0, math.exp(special.logsumexp(log_terms))))


def spiked_component_expectation(params: ParetoParams, tau: float, x) -> float:
    """Expected squared spike-component ``E[(Bx)_i^2] = |x|^2 * E[w^2; w > tau]``.

    Computes the general independent zero-mean-entry form
    ``sum_j E[B^2] x_j^2``; for a constant vector this reduces to
    ``N2 * E[w^2; w > tau] * x_i^2``.  Requires ``alpha > 2``.
    """
    x = np.asarray(x, dtype=float)
    second_moment = truncated_second_moment(params, tau)
    return float(second_moment * np.sum(x**2))


def bracket_nonzero_prob(alpha: float, scale_c: float, bracket_i: int) -> float:
    """Probability that a stable-tail entry lands in scale bracket ``i``.

    ``c_alpha * c**(-alpha*(i-1)) * (1 - c**-alpha)``, the tail mass between
    consecutive powers of the scale factor.
    """
    c_alpha = stable_tail_constant(alpha)  # validates alpha in (0, 2)
    if scale_c <= 1.0:
        raise DomainError(f"scale factor must exceed 1, got {scale_c}")
    if bracket_i < 1:
        raise DomainError(f"bracket index must be >= 1, got {bracket_i}")
    return c_alpha * scale_c ** (-alpha * (bracket_i - 1)) * (1.0 - scale_c**-alpha)


def resilient_path_bound(
    alpha: float, scale_c: float, M: int, N: int, bracket_i: int
) -> float:
    """Tail bound on a row holding ``c**(M-i)`` entries of bracket ``i``.

    Evaluates the Chernoff sparsity form with a real-valued count
    ``kappa = c**(M-i)``; requires ``N*p < kappa <= N``.
    """
    p = bracket_nonzero_prob(alpha, scale_c, bracket_i)
    kappa = scale_c ** (M - bracket_i)
    if kappa > N:
        raise ValidityError(f"path count kappa={kappa:.6g} exceeds the row length N={N}")
    if kappa <= N * p:
        raise ValidityError(
            f"path count kappa={kappa:.6g} does not exceed the mean N*p={N * p:.6g}; "
            "the tail bound is invalid here"
        )
    return min(1.0, math.exp(_chernoff_tail_log(N, p, kappa)))


@dataclass(frozen=True)
class GridCell:
    alpha: float
    bracket: int
    p: float
    kappa: float
    bound: float  # NaN when the cell is invalid
    valid: bool
    reason: str = ""


def contour_grid(alphas, brackets, scale_c: float, M: int, N: int) -> list[GridCell]:
    """Evaluate the path bound over an (alpha, bracket) grid.

    Cells outside the validity region are flagged with the failure reason and
    a NaN bound rather than silently zeroed.
    """
    alphas = list(alphas)
    brackets = list(brackets)
    if not alphas or not brackets:
        raise ValidationError("grid axes must be non-empty")
    cells = []
    for alpha in alphas:
        for bracket in brackets:
            p = bracket_nonzero_prob(alpha, scale_c, bracket)
            kappa = scale_c ** (M - bracket)
            try:
                bound = resilient_path_bound(alpha, scale_c, M, N, bracket)
                cells.append(GridCell(alpha, bracket, p, kappa, bound, True))
            except ValidityError as exc:
                cells.append(GridCell(alpha, bracket, p, kappa, math.nan, False, str(exc)))
    return cells


def grid_rows(cells: list[GridCell]) -> list[dict]:
    """Plot-ready rows: alpha, bracket, p, kappa_count, bound, valid."""
    return [
        {
            "alpha": cell.alpha,
            "bracket": cell.bracket,
            "p": cell.p,
            "kappa_count": cell.kappa,
            "bound": cell.bound,
            "valid": cell.valid,
        }
        for cell in cells
    ]


@dataclass(frozen=True)
class GenBoundInput:
    """Sparsity counts and sample size entering the simple generalization bound."""

    k_per_layer: tuple
    m: int
    margin_loss: float
    r: int = 2**16
    constant_C: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "k_per_layer", tuple(int(k) for k in self.k_per_layer))
        if self.m < 1:
            raise ValidationError(f"training-set size must be positive, got {self.m}")
        if any(k < 0 for k in self.k_per_layer):
            raise ValidationError("per-layer sparsities must be non-negative")
        if not (0.0 <= self.margin_loss <= 1.0):
            raise DomainError(f"margin loss must lie in [0, 1], got {self.margin_loss}")
        if self.constant_C <= 0:
            raise DomainError(f"bound constant must be positive, got {self.constant_C}")

    @property
    def q(self) -> int:
        return sum(self.k_per_layer)


@dataclass(frozen=True)
class SimpleBoundResult:
    margin_loss: float
    complexity_term: float
    total: float
    q: int
    r: int
    m: int
    constant_C: float


def simple_generalization_bound(inp: GenBoundInput) -> SimpleBoundResult:
    """Margin loss plus ``C * sqrt(q * log(r) / m)`` with ``q`` the total sparsity."""
    if inp.r < 2:
        raise DomainError(f"parameter alphabet size must be >= 2, got {inp.r}")
    complexity = inp.constant_C * math.sqrt(inp.q * math.log(inp.r) / inp.m)
    return SimpleBoundResult(
        margin_loss=inp.margin_loss,
        complexity_term=complexity,
        total=inp.margin_loss + complexity,
        q=inp.q,
        r=inp.r,
        m=inp.m,
        constant_C=inp.constant_C,
    )


@dataclass(frozen=True)
class CushionSet:
    """Measured network constants needed by the covering-number constant."""

    mu_per_layer: tuple
    mu_min_interlayer: tuple
    contraction_c: float
    depth_d: int
    f_max: float
    smoothness_rho: float = math.inf

    def __post_init__(self):
        object.__setattr__(self, "mu_per_layer", tuple(float(m) for m in self.mu_per_layer))
        object.__setattr__(
            self, "mu_min_interlayer", tuple(float(m) for m in self.mu_min_interlayer)
        )
        if self.depth_d < 1 or len(self.mu_per_layer) != self.depth_d:
            raise ValidationError("need one layer cushion per layer")
        if any(m < 0 or m > 1.0 + 1e-9 for m in self.mu_per_layer):
            raise ValidationError("layer cushions must lie in [0, 1]")
        if self.contraction_c < 1.0 - 1e-12:
            raise ValidationError(f"activation contraction must be >= 1, got {self.contraction_c}")
        if self.f_max <= 0:
            raise ValidationError(f"max output norm must be positive, got {self.f_max}")


def covering_kappa(cushions: CushionSet) -> float:
    """Covering constant ``e^2 * c^d * f_max * d / prod(mu_i)``."""
    if any(m == 0.0 for m in cushions.mu_per_layer):
        raise DomainError("a zero layer cushion makes the covering constant degenerate")
    product = math.prod(cushions.mu_per_layer)
    return (
        math.e**2
        * cushions.contraction_c**cushions.depth_d
        * cushions.f_max
        * cushions.depth_d
        / product
    )


def _dudley_head(q: float, log_c: float, a: float) -> float:
    """Analytic value of the integral over (0, a] via the asymptotic series.

    With ``T = log(C/a)`` the head equals ``sqrt(q) * C * Gamma(3/2, T)``
    which expands as ``sqrt(q) * a * (sqrt(T) + 1/(2 sqrt(T)) - ...)``;
    ``T >= log(1e9)`` keeps the truncation error far below float precision.
    """
    T = log_c - math.log(a)
    rt = math.sqrt(T)
    series = rt + 0.5 / rt - 0.25 / (T * rt) + 0.375 / (T**2 * rt)
    return math.sqrt(q) * a * series


def dudley_integral(q: float, kappa: float, D: float) -> float:
    """Entropy integral ``int_0^D sqrt(q * log(2 q kappa / eps)) d eps``.

    Adaptive quadrature over ``[a, D]`` with ``a = max(eps_mach, 1e-9 D)``
    plus an analytic series for the integrable head below ``a``.  Requires
    ``0 < D < 2 q kappa`` so the logarithm stays positive on the whole range.
    """
    if q < 1:
        raise DomainError(f"parameter count must be >= 1, got {q}")
    if kappa <= 0:
        raise DomainError(f"covering constant must be positive, got {kappa}")
    if D <= 0:
        raise DomainError(f"upper limit must be positive, got {D}")
    log_c = math.log(2.0 * q * kappa)
    if math.log(D) >= log_c:
        raise DomainError(
            f"upper limit D={D:.6g} reaches the region where the log argument "
            f"drops to 1 (needs D < {2.0 * q * kappa:.6g})"
        )
    a = max(np.finfo(float).eps, 1e-9 * D)

    # integrate in log space: eps = exp(s) keeps the steep left end well resolved
    def integrand(s: float) -> float:
        return math.sqrt(q * (log_c - s)) * math.exp(s)

    body, _ = integrate.quad(integrand, math.log(a), math.log(D), limit=400, epsrel=1e-11, epsabs=0.0)
    return body + _dudley_head(q, log_c, a)
