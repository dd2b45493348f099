"""Dense/sparse matrix values, the threshold split, Gaussian substitution and norms.

Dense matrices are plain float64 2-D numpy arrays.  Sparse matrices are
immutable COO triplet collections.  The central decomposition is
``W = low + high`` where ``high`` holds the entries beyond a cutoff ``tau``
and ``low`` the remainder; substitution replaces the low part with scaled
independent normals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ValidationError

__all__ = [
    "SparseMatrix",
    "ThresholdSplit",
    "CompressedMatrix",
    "PowerIterationResult",
    "as_matrix",
    "split_by_threshold",
    "gaussian_substitute",
    "frobenius_norm",
    "power_iteration",
    "spectral_norm",
    "stable_rank",
    "matvec",
    "nnz",
]

SPLIT_MODES = ("positive-support", "signed-absolute")
SUBSTITUTE_MODES = ("theory", "moment-matched")


def as_matrix(values) -> np.ndarray:
    """Coerce to a validated float64 2-D array with finite entries."""
    m = np.asarray(values, dtype=float)
    if m.ndim != 2:
        raise ValidationError(f"expected a 2-D matrix, got ndim={m.ndim}")
    if m.size == 0:
        raise ValidationError("matrix has no entries")
    if not np.all(np.isfinite(m)):
        raise ValidationError("matrix contains non-finite entries")
    return m


@dataclass(frozen=True)
class SparseMatrix:
    """COO triplets with unique in-range indices and no stored zeros."""

    rows: int
    cols: int
    row_idx: np.ndarray
    col_idx: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        r = np.asarray(self.row_idx, dtype=np.int64)
        c = np.asarray(self.col_idx, dtype=np.int64)
        v = np.asarray(self.values, dtype=float)
        if not (r.shape == c.shape == v.shape and r.ndim == 1):
            raise ValidationError("triplet arrays must be 1-D and of equal length")
        if self.rows < 1 or self.cols < 1:
            raise ValidationError("sparse matrix dimensions must be positive")
        if r.size:
            if r.min() < 0 or r.max() >= self.rows or c.min() < 0 or c.max() >= self.cols:
                raise ValidationError("triplet index out of range")
            if np.any(v == 0.0) or not np.all(np.isfinite(v)):
                raise ValidationError("stored values must be finite and non-zero")
            flat = r * self.cols + c
            if np.unique(flat).size != flat.size:
                raise ValidationError("duplicate (row, col) triplet")
        for arr, name in ((r, "row_idx"), (c, "col_idx"), (v, "values")):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def nnz(self) -> int:
        return int(self.values.size)

    def to_dense(self) -> np.ndarray:
        dense = np.zeros((self.rows, self.cols))
        dense[self.row_idx, self.col_idx] = self.values
        return dense

    @classmethod
    def from_dense(cls, dense) -> "SparseMatrix":
        dense = as_matrix(dense)
        r, c = np.nonzero(dense)
        return cls(dense.shape[0], dense.shape[1], r, c, dense[r, c])


@dataclass(frozen=True)
class ThresholdSplit:
    """Exact additive decomposition ``original = low + high.to_dense()``."""

    low: np.ndarray
    high: SparseMatrix
    tau: float
    mode: str


@dataclass(frozen=True)
class CompressedMatrix:
    """Realization of a substitution: retained spikes plus replaced bulk.

    In ``theory`` mode ``realized = sqrt(t) * G(seed) + spikes.to_dense()``
    with ``G`` standard normal over the full shape.  In ``moment-matched``
    mode only the replaced positions receive fresh draws, matched to the
    empirical mean/std of what they replace, and ``t`` records that variance.
    """

    t: float
    gaussian_seed: int
    spikes: SparseMatrix
    realized: np.ndarray
    mode: str


def split_by_threshold(W, tau: float, mode: str = "signed-absolute") -> ThresholdSplit:
    """Partition entries at the cutoff; ties go to the low (replaced) part.

    ``positive-support`` compares raw entries, ``signed-absolute`` compares
    magnitudes.  Reconstruction ``low + high`` is exact bit-for-bit because
    entries are copied, never recomputed.
    """
    W = as_matrix(W)
    if mode not in SPLIT_MODES:
        raise ValidationError(f"unknown split mode {mode!r}; expected one of {SPLIT_MODES}")
    if not (math.isfinite(tau) and tau > 0):
        raise DomainError(f"cutoff must be positive and finite, got {tau}")
    key = W if mode == "positive-support" else np.abs(W)
    high_mask = key > tau
    low = np.where(high_mask, 0.0, W)
    r, c = np.nonzero(high_mask)
    high = SparseMatrix(W.shape[0], W.shape[1], r, c, W[r, c])
    return ThresholdSplit(low=low, high=high, tau=float(tau), mode=mode)


def gaussian_substitute(
    split: ThresholdSplit, t: float = 0.0, mode: str = "theory", seed: int = 0
) -> CompressedMatrix:
    """Replace the low part of a split with normal draws.

    ``theory``: realized = sqrt(t) * G + high, with G standard normal over
    every position.  ``moment-matched``: replaced positions get draws with
    the empirical mean/std of the entries they replace; ``t`` is ignored on
    input and reports that empirical variance.  Deterministic given seed.
    """
    if mode not in SUBSTITUTE_MODES:
        raise ValidationError(
            f"unknown substitution mode {mode!r}; expected one of {SUBSTITUTE_MODES}"
        )
    shape = split.low.shape
    rng = np.random.default_rng(seed)
    spikes = split.high
    if mode == "theory":
        if not (math.isfinite(t) and t >= 0.0):
            raise DomainError(f"variance scale must be non-negative, got {t}")
        realized = spikes.to_dense()
        if t > 0.0:
            realized += math.sqrt(t) * rng.standard_normal(shape)
        return CompressedMatrix(
            t=float(t), gaussian_seed=seed, spikes=spikes, realized=realized, mode=mode
        )
    replaced_mask = np.ones(shape, dtype=bool)
    replaced_mask[spikes.row_idx, spikes.col_idx] = False
    replaced = split.low[replaced_mask]
    realized = spikes.to_dense()
    if replaced.size:
        mean = float(np.mean(replaced))
        std = float(np.std(replaced))
        realized[replaced_mask] = mean + std * rng.standard_normal(replaced.size)
        var = std * std
    else:
        var = 0.0
    return CompressedMatrix(
        t=var, gaussian_seed=seed, spikes=spikes, realized=realized, mode=mode
    )


def frobenius_norm(M) -> float:
    """Square root of the sum of squared entries."""
    if isinstance(M, SparseMatrix):
        return float(np.sqrt(np.sum(M.values**2)))
    return float(np.sqrt(np.sum(as_matrix(M) ** 2)))


@dataclass(frozen=True)
class PowerIterationResult:
    value: float
    iterations: int
    converged: bool
    degenerate: bool


def power_iteration(
    M, iterations: int = 1000, tol: float = 1e-12, seed: int = 0
) -> PowerIterationResult:
    """Largest-singular-value estimate by iterating M^T M on a seeded random start.

    Stops early once successive estimates differ by less than ``tol``.  A
    matrix that annihilates the iterate (e.g. the zero matrix) yields value 0
    with the degenerate flag set.
    """
    M = as_matrix(M)
    if iterations < 1:
        raise ValidationError(f"need at least one iteration, got {iterations}")
    rng = np.random.default_rng(seed)
    v = rng.random(M.shape[1]) - 0.5
    norm = np.linalg.norm(v)
    if norm == 0.0:  # all draws exactly 0.5: not reachable in practice
        v = np.ones(M.shape[1])
        norm = np.linalg.norm(v)
    v /= norm
    estimate = 0.0
    for it in range(1, iterations + 1):
        z = M.T @ (M @ v)
        nz = float(np.linalg.norm(z))
        if nz == 0.0:
            return PowerIterationResult(0.0, it, converged=True, degenerate=True)
        v = z / nz
        previous, estimate = estimate, math.sqrt(nz)
        if it > 1 and abs(estimate - previous) < tol:
            return PowerIterationResult(estimate, it, converged=True, degenerate=False)
    return PowerIterationResult(estimate, iterations, converged=False, degenerate=False)


def spectral_norm(M, iterations: int = 1000, tol: float = 1e-12, seed: int = 0) -> float:
    """Largest singular value via :func:`power_iteration` (zero matrix gives 0)."""
    return power_iteration(M, iterations=iterations, tol=tol, seed=seed).value


def stable_rank(M, iterations: int = 1000, tol: float = 1e-12, seed: int = 0) -> float:
    """Frobenius norm squared over spectral norm squared; in [1, min(rows, cols)]."""
    M = as_matrix(M)
    spectral = spectral_norm(M, iterations=iterations, tol=tol, seed=seed)
    if spectral == 0.0:
        raise DomainError("stable rank is undefined for the zero matrix")
    # squared Frobenius norm taken directly so exact cases stay exact
    return float(np.sum(M**2)) / spectral**2


def matvec(M, x) -> np.ndarray:
    """Matrix-vector product for dense arrays and sparse triplets."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValidationError(f"expected a vector, got ndim={x.ndim}")
    if isinstance(M, SparseMatrix):
        if x.size != M.cols:
            raise ValidationError(f"shape mismatch: matrix cols {M.cols} vs vector {x.size}")
        out = np.zeros(M.rows)
        np.add.at(out, M.row_idx, M.values * x[M.col_idx])
        return out
    M = as_matrix(M)
    if x.size != M.shape[1]:
        raise ValidationError(f"shape mismatch: matrix cols {M.shape[1]} vs vector {x.size}")
    return M @ x


def nnz(S: SparseMatrix) -> int:
    """Number of stored (non-zero) entries."""
    return S.nnz
