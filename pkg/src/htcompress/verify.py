"""Monte-Carlo verification harnesses and end-to-end experiments.

Every harness is reproducible bit-for-bit from its configuration plus a
single master seed; trial-level seeds derive from the master seed so the
thread count never changes a result.  Pass/fail verdicts use a three-sigma
binomial slack around the targeted rate.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import archive as archive_io
from .bounds import (
    GenBoundInput,
    SparsityBoundInput,
    binomial_tail_exact,
    covering_kappa,
    dudley_integral,
    simple_generalization_bound,
    sparsity_tail_bound,
    spiked_component_expectation,
)
from .errors import DomainError, InsufficientDataError, ValidationError, ValidityError
from .fcnn import (
    Dataset,
    LayerPlan,
    Network,
    accuracy,
    compress_network,
    empirical_margin_loss,
    load_network,
    measure_cushions,
)
from .matrices import gaussian_substitute, split_by_threshold, stable_rank
from .powerlaw import ParetoParams, fit_alpha_mle, sample_pareto, tail_probability

__all__ = [
    "VerificationReport",
    "AccuracyRow",
    "SweepRow",
    "MixtureComponent",
    "MixtureFit",
    "BoundReport",
    "verify_concentration",
    "verify_sparsity",
    "verify_spiked_expectation",
    "accuracy_experiment",
    "make_planted_archive",
    "stable_rank_alpha_sweep",
    "fit_linear_mixture_em",
    "end_to_end_bound_report",
]

NOISE_FLOOR = 1e-9


def _thread_limit() -> int:
    raw = os.environ.get("HTCOMPRESS_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError as exc:
        raise ValidationError(f"HTCOMPRESS_THREADS must be an integer, got {raw!r}") from exc


def _map_trials(worker, items):
    limit = _thread_limit()
    if limit == 1:
        return [worker(item) for item in items]
    with ThreadPoolExecutor(max_workers=limit) as pool:
        return list(pool.map(worker, items))


@dataclass(frozen=True)
class VerificationReport:
    name: str
    trials: int
    failures: int
    empirical_rate: float
    bound_target: float
    slack: float
    passed: bool
    details: dict = field(default_factory=dict)


def _binomial_slack(rate: float, trials: int) -> float:
    return 3.0 * math.sqrt(max(rate * (1.0 - rate), 0.0) / trials)


def verify_concentration(
    alpha: float,
    w_min: float,
    shape: tuple,
    epsilon: float,
    eta: float,
    mode: str = "conservative",
    trials: int = 1000,
    seed: int = 0,
    tau: float | None = None,
) -> VerificationReport:
    """Empirical failure rate of the bilinear substitution error bound.

    Each trial samples a fresh symmetrized heavy-tailed matrix, splits and
    substitutes it with the solved variance, then probes the difference with
    fresh uniform unit vectors.  The failure target is ``eta``; the default
    cutoff spends half the available ``tau^2 + t`` budget.
    """
    if trials < 100:
        raise ValidationError(f"need at least 100 trials, got {trials}")
    params = ParetoParams(alpha, w_min)
    n1, n2 = int(shape[0]), int(shape[1])
    log_term = math.log(3.0 / eta)
    budget = epsilon**2 / log_term if mode == "paper" else epsilon**2 / (2.0 * log_term)
    if tau is None:
        tau = math.sqrt(budget / 2.0)
    t = budget - tau**2
    if t < 0:
        raise DomainError(f"cutoff {tau} exceeds the budget for epsilon={epsilon}, eta={eta}")
    children = np.random.SeedSequence(seed).spawn(trials)

    def run_trial(child) -> bool:
        w_seed, g_seed, probe_seed = (int(s) for s in child.generate_state(3))
        W = sample_pareto(params, n1 * n2, seed=w_seed, symmetrize=True).reshape(n1, n2)
        split = split_by_threshold(W, tau, mode="signed-absolute")
        substituted = gaussian_substitute(split, t=t, mode="theory", seed=g_seed)
        diff = W - substituted.realized
        prng = np.random.default_rng(probe_seed)
        u = prng.standard_normal(n1)
        v = prng.standard_normal(n2)
        u /= np.linalg.norm(u)
        v /= np.linalg.norm(v)
        return bool(abs(u @ diff @ v) > epsilon)

    failures = int(sum(_map_trials(run_trial, children)))
    rate = failures / trials
    slack = _binomial_slack(eta, trials)
    return VerificationReport(
        name="concentration",
        trials=trials,
        failures=failures,
        empirical_rate=rate,
        bound_target=eta,
        slack=slack,
        passed=rate <= eta + slack,
        details={
            "alpha": alpha,
            "w_min": w_min,
            "shape": [n1, n2],
            "epsilon": epsilon,
            "eta": eta,
            "mode": mode,
            "tau": tau,
            "t": t,
            "seed": seed,
        },
    )


def verify_sparsity(
    alpha: float,
    w_min: float,
    tau: float,
    n: int,
    k: int,
    trials: int = 1000,
    seed: int = 0,
) -> VerificationReport:
    """Empirical spike-count tail versus the Chernoff bound and the exact tail.

    Passes only when the empirical rate sits within slack of the bound and
    the exact binomial tail is dominated by the bound.
    """
    if trials < 1:
        raise ValidationError("need at least one trial")
    params = ParetoParams(alpha, w_min)
    p = tail_probability(params, tau)
    if k <= n * p:
        raise ValidityError(
            f"sparsity target k={k} must exceed the mean n*p={n * p:.6g}"
        )
    bound = sparsity_tail_bound(SparsityBoundInput(n=n, p=p, k=k))
    exact = binomial_tail_exact(n, p, k)
    children = np.random.SeedSequence(seed).spawn(trials)

    def run_trial(child) -> bool:
        w_seed = int(child.generate_state(1)[0])
        values = sample_pareto(params, n, seed=w_seed)
        return bool(int(np.sum(values > tau)) >= k)

    events = int(sum(_map_trials(run_trial, children)))
    rate = events / trials
    slack = _binomial_slack(exact, trials)
    dominated = exact <= bound + 1e-15
    return VerificationReport(
        name="sparsity",
        trials=trials,
        failures=events,
        empirical_rate=rate,
        bound_target=bound,
        slack=slack,
        passed=(rate <= bound + slack) and dominated,
        details={
            "alpha": alpha,
            "w_min": w_min,
            "tau": tau,
            "n": n,
            "k": k,
            "p": p,
            "exact_tail": exact,
            "exact_dominated": dominated,
            "seed": seed,
        },
    )


def verify_spiked_expectation(
    alpha: float,
    w_min: float,
    tau: float,
    x,
    trials: int = 100_000,
    seed: int = 0,
    rel_tol: float = 0.05,
) -> VerificationReport:
    """Monte-Carlo mean of a squared spike component against the closed form.

    Rows are drawn with fair random signs so the cross terms of the square
    have zero mean, matching the independent-entry computation.
    """
    if trials < 1:
        raise ValidationError("need at least one trial")
    params = ParetoParams(alpha, w_min)
    x = np.asarray(x, dtype=float)
    closed = spiked_component_expectation(params, tau, x)
    rng = np.random.default_rng(seed)
    total = 0.0
    done = 0
    chunk = max(1, min(trials, 2**22 // max(x.size, 1)))
    while done < trials:
        take = min(chunk, trials - done)
        values = sample_pareto(params, take * x.size, seed=int(rng.integers(2**63)), symmetrize=True)
        rows = values.reshape(take, x.size)
        spikes = np.where(np.abs(rows) > tau, rows, 0.0)
        total += float(np.sum((spikes @ x) ** 2))
        done += take
    mc = total / trials
    slack = rel_tol * closed
    passed = abs(mc - closed) <= slack if closed > 0 else mc == 0.0
    return VerificationReport(
        name="spiked-expectation",
        trials=trials,
        failures=0,
        empirical_rate=mc,
        bound_target=closed,
        slack=slack,
        passed=passed,
        details={
            "alpha": alpha,
            "w_min": w_min,
            "tau": tau,
            "x_norm": float(np.linalg.norm(x)),
            "rel_tol": rel_tol,
            "seed": seed,
        },
    )


@dataclass(frozen=True)
class AccuracyRow:
    """One row of the pre/post-compression accuracy table."""

    model_name: str
    alpha_fit: float
    original_accuracy: float
    compressed_mean: float
    compressed_std: float
    trials: int = 10


def accuracy_experiment(
    net_or_archive,
    dataset: Dataset,
    trials: int = 10,
    seed: int = 0,
    model_name: str | None = None,
    tau: float | None = None,
) -> AccuracyRow:
    """Final-dense-layer compression accuracy, repeated and averaged.

    Runs the deviation-cutoff moment-matched compression of the last layer
    ``trials`` times with derived seeds and reports mean and standard
    deviation of the resulting accuracy, alongside the magnitude tail fit of
    that layer (floor set by the magnitude deviation rule).
    """
    if isinstance(net_or_archive, Network):
        net = net_or_archive
        name = model_name or "network"
    else:
        net = load_network(net_or_archive)
        name = model_name or Path(net_or_archive).name
    if trials < 1:
        raise ValidationError("need at least one trial")
    original = accuracy(net, dataset)
    final = net.depth
    fit = fit_alpha_mle(net.weights[final - 1].ravel(), w_min=None)
    trial_seeds = np.random.SeedSequence(seed).generate_state(trials)
    accuracies = []
    for trial_seed in trial_seeds:
        result = compress_network(
            net,
            mode="stddev",
            layer_plans={final: LayerPlan(tau=tau)},
            seed=int(trial_seed),
        )
        accuracies.append(accuracy(result.compressed, dataset))
    accuracies = np.asarray(accuracies)
    if float(np.ptp(accuracies)) == 0.0:  # identity compression: no summation noise
        mean, std = float(accuracies[0]), 0.0
    else:
        mean = float(np.mean(accuracies))
        std = float(np.std(accuracies, ddof=1)) if trials > 1 else 0.0
    return AccuracyRow(
        model_name=name,
        alpha_fit=fit.alpha_hat,
        original_accuracy=original,
        compressed_mean=mean,
        compressed_std=std,
        trials=trials,
    )


def make_planted_archive(
    directory,
    alpha: float,
    w_min: float = 1.0,
    rows: int = 64,
    cols: int = 64,
    seed: int = 0,
    name: str | None = None,
) -> Path:
    """Write a single-layer archive with symmetrized heavy-tailed entries."""
    params = ParetoParams(alpha, w_min)
    matrix = sample_pareto(params, rows * cols, seed=seed, symmetrize=True).reshape(rows, cols)
    archive_name = name or f"planted_alpha{alpha:g}_seed{seed}"
    return archive_io.write_archive(directory, archive_name, [("dense", matrix)])


@dataclass(frozen=True)
class SweepRow:
    name: str
    alpha_fit: float
    stable_rank: float


def stable_rank_alpha_sweep(archives) -> list[SweepRow]:
    """Tail fit and stable rank of the final dense layer of each archive."""
    rows = []
    for entry in archives:
        archive = entry if isinstance(entry, archive_io.Archive) else archive_io.load_archive(entry)
        final = archive.final_layer
        fit = fit_alpha_mle(final.matrix.ravel(), w_min=None)
        rows.append(
            SweepRow(
                name=archive.name,
                alpha_fit=fit.alpha_hat,
                stable_rank=stable_rank(final.matrix, iterations=1000),
            )
        )
    return rows


@dataclass(frozen=True)
class MixtureComponent:
    slope: float
    intercept: float
    noise_std: float
    weight: float


@dataclass(frozen=True)
class MixtureFit:
    components: tuple
    responsibilities: np.ndarray
    log_likelihood: float
    log_likelihoods: tuple
    iterations: int


def _weighted_line_fit(x, y, weights):
    design = np.column_stack([x, np.ones_like(x)])
    sw = np.sqrt(weights)
    coef, *_ = np.linalg.lstsq(design * sw[:, None], y * sw, rcond=None)
    return coef  # (slope, intercept)


def _em_once(x, y, n_components, rng, max_iters, tol):
    n = x.size
    labels = rng.permutation(np.arange(n) % n_components)
    resp = np.zeros((n, n_components))
    resp[np.arange(n), labels] = 1.0
    slopes = np.zeros(n_components)
    intercepts = np.zeros(n_components)
    sigmas = np.full(n_components, 1.0)
    weights = np.full(n_components, 1.0 / n_components)
    history = []
    ll = -math.inf
    iterations = 0
    for iteration in range(max_iters):
        # M-step from current responsibilities
        for c in range(n_components):
            r = resp[:, c]
            mass = float(np.sum(r))
            if mass <= 0:
                continue
            slope, intercept = _weighted_line_fit(x, y, r)
            slopes[c], intercepts[c] = slope, intercept
            resid = y - (slope * x + intercept)
            sigmas[c] = max(math.sqrt(float(np.sum(r * resid**2)) / mass), NOISE_FLOOR)
            weights[c] = mass / n
        # E-step and log-likelihood under the refreshed parameters
        log_p = np.empty((n, n_components))
        for c in range(n_components):
            resid = y - (slopes[c] * x + intercepts[c])
            log_p[:, c] = (
                math.log(max(weights[c], 1e-300))
                - math.log(sigmas[c])
                - 0.5 * math.log(2.0 * math.pi)
                - 0.5 * (resid / sigmas[c]) ** 2
            )
        row_max = np.max(log_p, axis=1, keepdims=True)
        log_norm = row_max[:, 0] + np.log(np.sum(np.exp(log_p - row_max), axis=1))
        resp = np.exp(log_p - log_norm[:, None])
        new_ll = float(np.sum(log_norm))
        history.append(new_ll)
        iterations = iteration + 1
        if math.isfinite(ll) and abs(new_ll - ll) <= tol * (1.0 + abs(new_ll)):
            ll = new_ll
            break
        ll = new_ll
    components = tuple(
        MixtureComponent(float(slopes[c]), float(intercepts[c]), float(sigmas[c]), float(weights[c]))
        for c in range(n_components)
    )
    return MixtureFit(
        components=components,
        responsibilities=resp,
        log_likelihood=ll,
        log_likelihoods=tuple(history),
        iterations=iterations,
    )


def fit_linear_mixture_em(
    points,
    n_components: int = 2,
    seed: int = 0,
    max_iters: int = 200,
    tol: float = 1e-9,
    restarts: int = 5,
) -> MixtureFit:
    """Mixture of linear regressions fitted by expectation maximization.

    Responsibilities are seeded by a random hard partition; the best of
    ``restarts`` runs (by final log-likelihood) is returned.  The
    log-likelihood trajectory is non-decreasing within each run.
    """
    points = np.asarray(points, dtype=float)
    if points.ndim != 2 or points.shape[1] != 2:
        raise ValidationError("points must be an (n, 2) array of (x, y) pairs")
    x, y = points[:, 0], points[:, 1]
    if x.size < 2 * n_components:
        raise InsufficientDataError(
            f"need at least {2 * n_components} points for {n_components} components"
        )
    if float(np.ptp(x)) == 0.0:
        raise DomainError("all x values identical: the regression design is singular")
    rng = np.random.default_rng(seed)
    best = None
    for _ in range(max(1, restarts)):
        fit = _em_once(x, y, n_components, rng, max_iters, tol)
        if best is None or fit.log_likelihood > best.log_likelihood:
            best = fit
    return best


@dataclass(frozen=True)
class BoundReport:
    """Everything the generalization bound needs, echoed with its inputs."""

    m: int
    gamma: float
    margin_loss: float
    gamma_grid: tuple
    k_per_layer: tuple
    q: int
    r: int
    constant_C: float
    complexity_term: float
    bound_total: float
    kappa: float
    dudley_D: float | None
    dudley_value: float | None
    cushions: dict
    compression: tuple
    mode: str
    seed: int

    def to_json_dict(self) -> dict:
        out = {
            "m": self.m,
            "gamma": self.gamma,
            "margin_loss": self.margin_loss,
            "gamma_grid": [list(pair) for pair in self.gamma_grid],
            "k_per_layer": list(self.k_per_layer),
            "q": self.q,
            "r": self.r,
            "constant_C": self.constant_C,
            "complexity_term": self.complexity_term,
            "bound_total": self.bound_total,
            "kappa": self.kappa,
            "dudley": {"D": self.dudley_D, "value": self.dudley_value},
            "cushions": self.cushions,
            "compression": [dict(record) for record in self.compression],
            "mode": self.mode,
            "seed": self.seed,
        }
        return out


def end_to_end_bound_report(
    net: Network,
    dataset: Dataset,
    gamma: float,
    r: int = 2**16,
    constant_C: float = 1.0,
    mode: str = "theory",
    layer_plans: dict | None = None,
    seed: int = 0,
    dudley_D: float | None = None,
) -> BoundReport:
    """Measure cushions, compress, and evaluate the sparsity-count bound.

    The margin loss of the original network at ``gamma`` combines with the
    compressed sparsity count ``q`` into ``margin_loss +
    C*sqrt(q*log(r)/m)``; the covering constant and entropy integral are
    reported alongside.  The entropy-integral upper limit defaults to
    ``gamma`` when positive.
    """
    cushion_seed, compress_seed = (
        int(s) for s in np.random.SeedSequence(seed).generate_state(2)
    )
    report = measure_cushions(net, dataset, seed=cushion_seed)
    compression = compress_network(net, mode=mode, layer_plans=layer_plans, seed=compress_seed)
    q = compression.total_sparsity
    margin_loss = empirical_margin_loss(net, dataset, gamma)
    grid = []
    for g in (0.0, 0.25 * gamma, 0.5 * gamma, gamma, 1.5 * gamma, 2.0 * gamma):
        grid.append((float(g), empirical_margin_loss(net, dataset, float(g))))
    simple = simple_generalization_bound(
        GenBoundInput(
            k_per_layer=compression.k_per_layer,
            m=dataset.size,
            margin_loss=margin_loss,
            r=r,
            constant_C=constant_C,
        )
    )
    kappa = covering_kappa(report.to_cushion_set())
    D = dudley_D if dudley_D is not None else (gamma if gamma > 0 else None)
    dudley_value = None
    if D is not None and q >= 1 and D < 2.0 * q * kappa:
        dudley_value = dudley_integral(q, kappa, D)
    records = tuple(
        {
            "layer": rec.layer,
            "epsilon": rec.epsilon,
            "eta": rec.eta,
            "tau": rec.tau,
            "t": rec.t,
            "lambda": rec.lam,
            "k": rec.k,
            "mode": rec.mode,
            "tau_reduced": rec.tau_reduced,
        }
        for rec in compression.records
    )
    def plain(value):  # NaN (unused lower-triangle cells) maps to None for JSON
        return None if isinstance(value, float) and math.isnan(value) else value

    cushion_dict = {
        "mu_per_layer": list(report.mu_per_layer),
        "mu_interlayer": [[plain(v) for v in row] for row in report.mu_interlayer],
        "mu_min_interlayer": list(report.mu_min_interlayer),
        "contraction_c": report.contraction_c,
        "smoothness_rho": report.smoothness_rho,
        "f_max": report.f_max,
        "skipped_fraction": report.skipped_fraction,
        "reliable": report.reliable,
        "relu_exact": report.relu_exact,
    }
    return BoundReport(
        m=dataset.size,
        gamma=gamma,
        margin_loss=margin_loss,
        gamma_grid=tuple(grid),
        k_per_layer=compression.k_per_layer,
        q=q,
        r=r,
        constant_C=constant_C,
        complexity_term=simple.complexity_term,
        bound_total=simple.total,
        kappa=kappa,
        dudley_D=D,
        dudley_value=dudley_value,
        cushions=cushion_dict,
        compression=records,
        mode=mode,
        seed=seed,
    )
