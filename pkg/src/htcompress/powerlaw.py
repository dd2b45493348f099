"""Power-law (Pareto) matrix-element model.

Sampling, tail probabilities, truncated moments and maximum-likelihood
fitting for the density ``(alpha * w_min**alpha) * w**-(alpha+1)`` supported
on ``[w_min, inf)``, plus the asymptotic tail constants of the symmetric
stable family.  ``alpha`` is always the *shape* (tail) exponent; the density
falls off as ``w**-(alpha+1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InsufficientDataError, ValidationError

__all__ = [
    "ParetoParams",
    "StableTailParams",
    "PowerLawFit",
    "sample_pareto",
    "tail_probability",
    "inverse_tail_probability",
    "truncated_second_moment",
    "fit_alpha_mle",
    "stddev_floor",
    "stable_tail_constant",
    "stable_tail_density",
]


@dataclass(frozen=True)
class ParetoParams:
    """Tail exponent and support floor of the matrix-element law."""

    alpha: float
    w_min: float

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise DomainError(f"tail exponent must be positive and finite, got {self.alpha}")
        if not (math.isfinite(self.w_min) and self.w_min > 0):
            raise DomainError(f"support floor must be positive and finite, got {self.w_min}")


@dataclass(frozen=True)
class StableTailParams:
    """Stability index and scale of a symmetric stable law (asymmetry and shift fixed at 0)."""

    alpha: float
    scale_c: float

    def __post_init__(self):
        if not (0.0 < self.alpha < 2.0):
            raise DomainError(f"stability index must lie strictly in (0, 2), got {self.alpha}")
        if not (math.isfinite(self.scale_c) and self.scale_c > 0):
            raise DomainError(f"scale must be positive and finite, got {self.scale_c}")


@dataclass(frozen=True)
class PowerLawFit:
    """Maximum-likelihood tail fit over sample magnitudes.

    ``alpha_hat`` uses the shape convention (density exponent is
    ``alpha_hat + 1``; see :attr:`density_exponent`).  The fit always uses
    magnitudes ``|x|``, never signed values.
    """

    alpha_hat: float
    w_min_used: float
    n_tail: int

    @property
    def density_exponent(self) -> float:
        """Exponent of the density itself, as reported by density-convention fitters."""
        return self.alpha_hat + 1.0


def tail_probability(params: ParetoParams, tau: float) -> float:
    """Probability that a draw exceeds ``tau``: ``w_min**alpha * tau**-alpha``."""
    if tau < params.w_min:
        raise DomainError(
            f"cutoff {tau} lies below the support floor {params.w_min}; the tail formula is invalid there"
        )
    return float((params.w_min / tau) ** params.alpha)


def inverse_tail_probability(params: ParetoParams, u) -> float | np.ndarray:
    """Threshold whose exceedance probability is ``u``: ``w_min * u**(-1/alpha)``.

    Accepts scalars or arrays with values in (0, 1].  This is the inverse of
    :func:`tail_probability` and the map used by the sampler.
    """
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0.0) or np.any(u > 1.0):
        raise DomainError("tail probability must lie in (0, 1]")
    out = params.w_min * u ** (-1.0 / params.alpha)
    return float(out) if out.ndim == 0 else out


def sample_pareto(
    params: ParetoParams, n: int, seed: int, symmetrize: bool = False
) -> np.ndarray:
    """Draw ``n`` values by inverse-transform sampling, optionally with fair random signs.

    Magnitudes are always at least ``w_min``.  Identical ``(params, n, seed,
    symmetrize)`` produce identical output.
    """
    if n < 1:
        raise ValidationError(f"requested an empty sample (n={n}); need n >= 1")
    rng = np.random.default_rng(seed)
    u = 1.0 - rng.random(n)  # maps [0, 1) onto (0, 1], keeping the draw finite
    values = inverse_tail_probability(params, u)
    if symmetrize:
        signs = np.where(rng.random(n) < 0.5, -1.0, 1.0)
        values = values * signs
    return values


def truncated_second_moment(params: ParetoParams, tau: float) -> float:
    """Second moment restricted to the tail above ``tau``.

    Evaluates ``alpha * w_min**alpha * tau**(2-alpha) / (alpha - 2)``, the
    integral of ``w**2`` against the density over ``[tau, inf)``.  Diverges
    unless ``alpha > 2``.
    """
    if params.alpha <= 2.0:
        raise DomainError(
            f"tail second moment diverges for alpha <= 2 (got alpha={params.alpha})"
        )
    if tau < params.w_min:
        raise DomainError(f"cutoff {tau} lies below the support floor {params.w_min}")
    a, wm = params.alpha, params.w_min
    return float(a * wm**a * tau ** (2.0 - a) / (a - 2.0))


def stddev_floor(data) -> float:
    """Support-floor rule: the standard deviation of the magnitudes.

    Matches the thresholding convention of the moment-matched compression
    protocol; offered as the default when no floor is supplied to the fitter.
    """
    mags = np.abs(np.asarray(data, dtype=float))
    if mags.size < 2:
        raise InsufficientDataError("need at least 2 values to compute a magnitude deviation")
    return float(np.std(mags))


def fit_alpha_mle(data, w_min: float | None = None) -> PowerLawFit:
    """Maximum-likelihood shape estimate over magnitudes at or above ``w_min``.

    ``alpha_hat = n_tail / sum(log(|x| / w_min))`` over the tail samples.
    When ``w_min`` is ``None`` the :func:`stddev_floor` rule is applied.
    """
    mags = np.abs(np.asarray(data, dtype=float))
    if w_min is None:
        w_min = stddev_floor(mags)
    if not (math.isfinite(w_min) and w_min > 0):
        raise DomainError(f"support floor must be positive and finite, got {w_min}")
    tail = mags[mags >= w_min]
    n_tail = int(tail.size)
    if n_tail < 2:
        raise InsufficientDataError(
            f"only {n_tail} sample(s) at or above w_min={w_min}; need at least 2"
        )
    log_sum = float(np.sum(np.log(tail / w_min)))
    if log_sum <= 0.0:
        raise DomainError(
            "all tail samples sit exactly at the support floor; the shape estimate is infinite"
        )
    return PowerLawFit(alpha_hat=n_tail / log_sum, w_min_used=float(w_min), n_tail=n_tail)


def stable_tail_constant(alpha: float) -> float:
    """Tail constant ``sin(pi*alpha/2) * Gamma(alpha) / pi`` of the symmetric stable family."""
    if not (0.0 < alpha < 2.0):
        raise DomainError(f"stability index must lie strictly in (0, 2), got {alpha}")
    return math.sin(math.pi * alpha / 2.0) * math.gamma(alpha) / math.pi


def stable_tail_density(params: StableTailParams, w: float) -> float:
    """Asymptotic tail density ``alpha * c**alpha * c_alpha * w**-(alpha+1)``.

    Valid only as a large-``w`` asymptote of the symmetric stable density; it
    is not normalized and must not be used near the origin.
    """
    if w <= 0.0:
        raise DomainError(f"tail density is defined for w > 0, got {w}")
    a, c = params.alpha, params.scale_c
    return a * c**a * stable_tail_constant(a) * w ** (-(a + 1.0))
