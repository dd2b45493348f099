"""Minimal ReLU fully connected networks: forward traces, margin loss, SGD
training, cushion measurement and whole-network compression.

The network has no bias terms; the trainer compensates by augmenting every
input with a constant coordinate (the ``augment_input`` flag on the network).
Layers are numbered 1..d and layer ``i`` maps ``x^i = W^i phi(x^{i-1})`` with
``phi`` applied to hidden pre-activations only (the raw input enters layer 1
unactivated).
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import archive as archive_io
from .bounds import CushionSet, solve_variance_t
from .errors import (
    DomainError,
    InfeasibilityError,
    InfeasibleThresholdError,
    TrainingDivergedError,
    ValidationError,
)
from .matrices import frobenius_norm, gaussian_substitute, nnz, split_by_threshold

__all__ = [
    "Network",
    "LayerTrace",
    "BatchTrace",
    "Dataset",
    "CushionReport",
    "LayerPlan",
    "LayerCompressionRecord",
    "CompressionResult",
    "relu",
    "softmax",
    "forward",
    "forward_dataset",
    "predict",
    "empirical_margin_loss",
    "accuracy",
    "cross_entropy_loss",
    "train_sgd",
    "make_blobs",
    "interlayer_jacobian",
    "layer_cushion",
    "interlayer_cushion",
    "minimal_interlayer_cushion",
    "activation_contraction",
    "interlayer_smoothness",
    "measure_cushions",
    "cushion_scaled_plans",
    "compress_network",
    "save_network",
    "load_network",
]

NETWORK_SIDECAR = "network.json"


@dataclass(frozen=True)
class Network:
    """Stack of weight matrices ``W^i`` of shape ``h_i x h_{i-1}``, ReLU between."""

    weights: tuple
    augment_input: bool = False

    def __post_init__(self):
        weights = tuple(np.asarray(w, dtype=float) for w in self.weights)
        if not weights:
            raise ValidationError("network needs at least one layer")
        for w in weights:
            if w.ndim != 2 or not np.all(np.isfinite(w)):
                raise ValidationError("every layer must be a finite 2-D matrix")
            w.setflags(write=False)
        for a, b in zip(weights, weights[1:]):
            if b.shape[1] != a.shape[0]:
                raise ValidationError(
                    f"layer shapes do not chain: {a.shape} feeds {b.shape}"
                )
        object.__setattr__(self, "weights", weights)

    @property
    def depth(self) -> int:
        return len(self.weights)

    @property
    def input_dim(self) -> int:
        """Dimension of raw inputs, before any constant-coordinate augmentation."""
        d = self.weights[0].shape[1]
        return d - 1 if self.augment_input else d

    def hidden_dim(self, i: int) -> int:
        """Output dimension ``h_i`` of layer ``i`` (1-based)."""
        return self.weights[i - 1].shape[0]


@dataclass(frozen=True)
class LayerTrace:
    """Single-sample trace: the (possibly augmented) input and every pre-activation."""

    input: np.ndarray
    preactivations: tuple


@dataclass(frozen=True)
class BatchTrace:
    """Row-per-sample variant of :class:`LayerTrace`."""

    inputs: np.ndarray
    preactivations: tuple


@dataclass(frozen=True)
class Dataset:
    """Inputs with 0-based integer class labels."""

    inputs: np.ndarray
    labels: np.ndarray
    class_count: int

    def __post_init__(self):
        inputs = np.asarray(self.inputs, dtype=float)
        labels = np.asarray(self.labels, dtype=int)
        if inputs.ndim != 2 or labels.ndim != 1 or inputs.shape[0] != labels.size:
            raise ValidationError("inputs must be (m, b) with one label per row")
        if labels.size == 0:
            raise ValidationError("dataset is empty")
        if self.class_count < 1 or labels.min() < 0 or labels.max() >= self.class_count:
            raise ValidationError("labels out of range for the declared class count")
        inputs.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "inputs", inputs)
        object.__setattr__(self, "labels", labels)

    @property
    def size(self) -> int:
        return int(self.labels.size)


def relu(x):
    return np.maximum(x, 0.0)


def softmax(z) -> np.ndarray:
    """Shift-invariant softmax along the last axis."""
    z = np.asarray(z, dtype=float)
    if not np.all(np.isfinite(z)):
        raise ValidationError("softmax requires finite inputs")
    shifted = z - np.max(z, axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=-1, keepdims=True)


def _augment(net: Network, X: np.ndarray) -> np.ndarray:
    if not net.augment_input:
        return X
    ones = np.ones(X.shape[:-1] + (1,))
    return np.concatenate([X, ones], axis=-1)


def forward(net: Network, x) -> tuple[np.ndarray, LayerTrace]:
    """Logits ``x^d`` and the full pre-activation trace for one input."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValidationError(f"expected a single input vector, got ndim={x.ndim}")
    if x.size != net.input_dim:
        raise ValidationError(f"input has dim {x.size}, network expects {net.input_dim}")
    x0 = _augment(net, x)
    pre = []
    a = x0
    for index, w in enumerate(net.weights):
        z = w @ a
        pre.append(z)
        if index < net.depth - 1:
            a = relu(z)
    return pre[-1], LayerTrace(input=x0, preactivations=tuple(pre))


def forward_dataset(net: Network, X) -> tuple[np.ndarray, BatchTrace]:
    """Batched forward pass; rows of ``X`` are raw inputs."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValidationError(f"expected a batch of inputs, got ndim={X.ndim}")
    if X.shape[1] != net.input_dim:
        raise ValidationError(f"inputs have dim {X.shape[1]}, network expects {net.input_dim}")
    X0 = _augment(net, X)
    pre = []
    A = X0
    for index, w in enumerate(net.weights):
        Z = A @ w.T
        pre.append(Z)
        if index < net.depth - 1:
            A = relu(Z)
    return pre[-1], BatchTrace(inputs=X0, preactivations=tuple(pre))


def predict(net: Network, dataset: Dataset) -> np.ndarray:
    """Argmax class per sample; ties resolve to the smallest class index."""
    logits, _ = forward_dataset(net, dataset.inputs)
    return np.argmax(logits, axis=1)


def _margins(net: Network, dataset: Dataset) -> np.ndarray:
    logits, _ = forward_dataset(net, dataset.inputs)
    rows = np.arange(dataset.size)
    true_scores = logits[rows, dataset.labels]
    masked = logits.copy()
    masked[rows, dataset.labels] = -np.inf
    return true_scores - np.max(masked, axis=1)


def empirical_margin_loss(net: Network, dataset: Dataset, gamma: float) -> float:
    """Fraction of samples whose true-class score beats every rival by at most ``gamma``."""
    if gamma < 0:
        raise DomainError(f"margin must be non-negative, got {gamma}")
    if dataset.class_count < 2:
        raise DomainError("margin loss needs at least two classes")
    return float(np.mean(_margins(net, dataset) <= gamma))


def accuracy(net: Network, dataset: Dataset) -> float:
    """Exactly ``1 - empirical_margin_loss(net, dataset, 0)``."""
    return 1.0 - empirical_margin_loss(net, dataset, 0.0)


def cross_entropy_loss(net: Network, dataset: Dataset) -> float:
    logits, _ = forward_dataset(net, dataset.inputs)
    probs = softmax(logits)
    picked = probs[np.arange(dataset.size), dataset.labels]
    return float(-np.mean(np.log(np.maximum(picked, 1e-300))))


def _init_weights(shape, rng, augment: bool) -> list:
    dims = list(shape)
    if len(dims) < 2:
        raise ValidationError("network shape needs an input and an output dimension")
    if augment:
        dims[0] += 1
    weights = []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = 1.0 / math.sqrt(fan_in)
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
    return weights


def train_sgd(
    shape,
    dataset: Dataset,
    step_size: float = 0.1,
    batch_size: int = 32,
    epochs: int = 20,
    seed: int = 0,
    augment: bool = True,
) -> Network:
    """Mini-batch SGD on softmax cross entropy; deterministic given the seed.

    ``shape`` lists raw dimensions ``(b, h_1, ..., k)``; with ``augment`` the
    first layer receives one extra constant input coordinate in place of bias
    terms.  ``epochs=0`` returns the untouched initialization.
    """
    if step_size <= 0:
        raise DomainError(f"step size must be positive, got {step_size}")
    if batch_size < 1 or epochs < 0:
        raise ValidationError("need batch_size >= 1 and epochs >= 0")
    if shape[0] != dataset.inputs.shape[1] or shape[-1] != dataset.class_count:
        raise ValidationError("network shape does not match the dataset")
    rng = np.random.default_rng(seed)
    weights = _init_weights(shape, rng, augment)
    depth = len(weights)
    m = dataset.size
    X_all = _augment(Network(tuple(weights), augment_input=augment), dataset.inputs)
    y_all = dataset.labels
    for _ in range(epochs):
        order = rng.permutation(m)
        for start in range(0, m, batch_size):
            batch = order[start : start + batch_size]
            X0 = X_all[batch]
            y = y_all[batch]
            # forward, keeping activations
            activations = [X0]
            pre = []
            A = X0
            for index, w in enumerate(weights):
                Z = A @ w.T
                pre.append(Z)
                if index < depth - 1:
                    A = relu(Z)
                    activations.append(A)
            probs = softmax(pre[-1])
            if not np.all(np.isfinite(probs)):
                raise TrainingDivergedError("softmax produced non-finite values")
            # backward
            delta = probs
            delta[np.arange(len(batch)), y] -= 1.0
            delta /= len(batch)
            for index in range(depth - 1, -1, -1):
                grad = delta.T @ activations[index]
                if not np.all(np.isfinite(grad)):
                    raise TrainingDivergedError(f"gradient diverged at layer {index + 1}")
                if index > 0:
                    delta = (delta @ weights[index]) * (pre[index - 1] > 0)
                weights[index] = weights[index] - step_size * grad
    net = Network(tuple(weights), augment_input=augment)
    if not math.isfinite(cross_entropy_loss(net, dataset)):
        raise TrainingDivergedError("training loss is non-finite")
    return net


def make_blobs(
    n: int, dim: int, classes: int, seed: int = 0, center_scale: float = 3.5, noise: float = 1.0
) -> Dataset:
    """Balanced Gaussian blobs with class centers on a sphere of radius ``center_scale``."""
    if n < classes:
        raise ValidationError("need at least one sample per class")
    rng = np.random.default_rng(seed)
    centers = rng.standard_normal((classes, dim))
    centers *= center_scale / np.linalg.norm(centers, axis=1, keepdims=True)
    labels = rng.permutation(np.arange(n) % classes)
    inputs = centers[labels] + noise * rng.standard_normal((n, dim))
    return Dataset(inputs=inputs, labels=labels, class_count=classes)


def _check_layer_index(net: Network, i: int, name: str = "layer") -> None:
    if not (1 <= i <= net.depth):
        raise ValidationError(f"{name} index {i} outside 1..{net.depth}")


def interlayer_jacobian(net: Network, trace: LayerTrace, i: int, j: int) -> np.ndarray:
    """Jacobian of the layer-``i``-to-``j`` map at the traced point.

    For ReLU this is the product ``W^j D^{j-1} ... W^{i+1} D^i`` with ``D^l``
    the 0/1 activation mask at ``x^l``; ``i == j`` gives the identity.
    """
    _check_layer_index(net, i)
    _check_layer_index(net, j)
    if i > j:
        raise ValidationError(f"need i <= j, got i={i}, j={j}")
    J = np.eye(net.hidden_dim(i))
    for layer in range(i + 1, j + 1):
        mask = trace.preactivations[layer - 2] > 0
        J = net.weights[layer - 1] @ (mask[:, None] * J)
    return J


def _batched_interlayer_jacobians(net: Network, trace: BatchTrace, i: int, j: int) -> np.ndarray:
    m = trace.inputs.shape[0]
    J = np.broadcast_to(np.eye(net.hidden_dim(i)), (m, net.hidden_dim(i), net.hidden_dim(i))).copy()
    for layer in range(i + 1, j + 1):
        masks = trace.preactivations[layer - 2] > 0
        J = np.matmul(net.weights[layer - 1], masks[:, :, None] * J)
    return J


def _feeding_activations(net: Network, trace: BatchTrace, i: int) -> np.ndarray:
    """What layer ``i`` multiplies: the augmented input for i=1, ReLU output otherwise."""
    if i == 1:
        return trace.inputs
    return relu(trace.preactivations[i - 2])


def layer_cushion(net: Network, dataset: Dataset, i: int) -> float:
    """Worst ratio ``|W^i a| / (|W^i|_F |a|)`` over the set, ``a`` the feeding activation."""
    value, _, used = _layer_cushion_detail(net, dataset, i)
    if used == 0:
        raise DomainError(f"every sample feeds layer {i} a zero activation vector")
    return value


def _layer_cushion_detail(net: Network, dataset: Dataset, i: int):
    _check_layer_index(net, i)
    _, trace = forward_dataset(net, dataset.inputs)
    A = _feeding_activations(net, trace, i)
    a_norms = np.linalg.norm(A, axis=1)
    out_norms = np.linalg.norm(trace.preactivations[i - 1], axis=1)
    keep = a_norms > 0
    skipped = int(np.sum(~keep))
    used = int(np.sum(keep))
    if used == 0:
        return math.nan, skipped, 0
    w_frob = frobenius_norm(net.weights[i - 1])
    ratios = out_norms[keep] / (w_frob * a_norms[keep])
    return float(np.min(ratios)), skipped, used


def interlayer_cushion(net: Network, dataset: Dataset, i: int, j: int) -> float:
    """Worst ratio ``|J x^i| / (|J|_F |x^i|)`` with the per-sample Jacobian ``J``."""
    value, _, used = _interlayer_cushion_detail(net, dataset, i, j)
    if used == 0:
        raise DomainError(f"every sample has a zero pre-activation at layer {i}")
    return value


def _interlayer_cushion_detail(net: Network, dataset: Dataset, i: int, j: int):
    _check_layer_index(net, i)
    _check_layer_index(net, j)
    if i > j:
        raise ValidationError(f"need i <= j, got i={i}, j={j}")
    _, trace = forward_dataset(net, dataset.inputs)
    Xi = trace.preactivations[i - 1]
    J = _batched_interlayer_jacobians(net, trace, i, j)
    x_norms = np.linalg.norm(Xi, axis=1)
    keep = x_norms > 0
    skipped = int(np.sum(~keep))
    used = int(np.sum(keep))
    if used == 0:
        return math.nan, skipped, 0
    Jx = np.einsum("sji,si->sj", J[keep], Xi[keep])
    j_frob = np.sqrt(np.sum(J[keep] ** 2, axis=(1, 2)))
    ratios = np.linalg.norm(Jx, axis=1) / (j_frob * x_norms[keep])
    return float(np.min(ratios)), skipped, used


def minimal_interlayer_cushion(net: Network, dataset: Dataset, i: int) -> float:
    """``min(1/sqrt(h_i), min over j > i of the interlayer cushion)``."""
    _check_layer_index(net, i)
    best = 1.0 / math.sqrt(net.hidden_dim(i))
    for j in range(i + 1, net.depth + 1):
        best = min(best, interlayer_cushion(net, dataset, i, j))
    return best


def activation_contraction(net: Network, dataset: Dataset) -> float:
    """Worst ratio ``|x^i| / |phi(x^i)|`` over consumed hidden activations.

    Samples whose activation vanishes entirely are degenerate (the ratio is
    infinite) and are excluded from the maximum; single-layer networks have
    no consumed activation and report 1.
    """
    value, _ = _activation_contraction_detail(net, dataset)
    return value


def _activation_contraction_detail(net: Network, dataset: Dataset):
    _, trace = forward_dataset(net, dataset.inputs)
    worst = 1.0
    degenerate = 0
    for i in range(1, net.depth):
        Xi = trace.preactivations[i - 1]
        x_norms = np.linalg.norm(Xi, axis=1)
        phi_norms = np.linalg.norm(relu(Xi), axis=1)
        alive = phi_norms > 0
        degenerate += int(np.sum(~alive))
        if np.any(alive):
            worst = max(worst, float(np.max(x_norms[alive] / phi_norms[alive])))
    return worst, degenerate


def interlayer_smoothness(
    net: Network,
    dataset: Dataset,
    relative_noise: float,
    draws: int,
    delta: float,
    seed: int = 0,
    max_samples: int = 128,
) -> float:
    """Largest linearization constant feasible at confidence ``1 - delta``.

    For each sample and layer pair ``i < j``, isotropic noise of norm
    ``relative_noise * |x^i|`` probes how far the composed map drifts from
    the frozen Jacobian; a zero drift contributes an infinite constant.  The
    returned value is the minimum over samples and pairs of the per-case
    ``delta``-quantile.  ``inf`` means the linearization was exact everywhere
    probed (a ReLU network whose masks never flipped).
    """
    if relative_noise <= 0:
        raise DomainError(f"noise magnitude must be positive, got {relative_noise}")
    if draws < 1:
        raise ValidationError(f"need at least one draw, got {draws}")
    if not (0.0 < delta < 1.0):
        raise DomainError(f"confidence slack must lie in (0, 1), got {delta}")
    if net.depth < 2:
        return math.inf
    rng = np.random.default_rng(seed)
    take = min(max_samples, dataset.size)
    sample_ids = np.linspace(0, dataset.size - 1, take).astype(int)
    _, trace = forward_dataset(net, dataset.inputs)
    rho_hat = math.inf
    for s in sample_ids:
        single = LayerTrace(
            input=trace.inputs[s],
            preactivations=tuple(p[s] for p in trace.preactivations),
        )
        for i in range(1, net.depth):
            xi = single.preactivations[i - 1]
            xi_norm = float(np.linalg.norm(xi))
            if xi_norm == 0.0:
                continue
            for j in range(i + 1, net.depth + 1):
                xj_norm = float(np.linalg.norm(single.preactivations[j - 1]))
                J = interlayer_jacobian(net, single, i, j)
                feasible = np.empty(draws)
                for k in range(draws):
                    eta = rng.standard_normal(xi.size)
                    eta *= relative_noise * xi_norm / np.linalg.norm(eta)
                    z = xi + eta
                    a = relu(z)
                    for layer in range(i + 1, j + 1):
                        out = net.weights[layer - 1] @ a
                        a = relu(out) if layer < j else out
                    drift = float(np.linalg.norm(out - J @ z))
                    if drift == 0.0:
                        feasible[k] = math.inf
                    else:
                        feasible[k] = np.linalg.norm(eta) * xj_norm / (xi_norm * drift)
                # order statistic, not interpolation: keeps infinities exact
                rho_hat = min(rho_hat, float(np.quantile(feasible, delta, method="lower")))
    return rho_hat


@dataclass(frozen=True)
class CushionReport:
    """Measured network constants plus bookkeeping on excluded samples."""

    mu_per_layer: tuple
    mu_interlayer: tuple  # row i, col j hold the (i, j) cushion; NaN for i > j
    mu_min_interlayer: tuple
    contraction_c: float
    smoothness_rho: float
    f_max: float
    skipped_fraction: float
    reliable: bool
    relu_exact: bool = True

    def to_cushion_set(self, depth: int | None = None) -> CushionSet:
        return CushionSet(
            mu_per_layer=self.mu_per_layer,
            mu_min_interlayer=self.mu_min_interlayer,
            contraction_c=self.contraction_c,
            depth_d=depth if depth is not None else len(self.mu_per_layer),
            f_max=self.f_max,
            smoothness_rho=self.smoothness_rho,
        )


def measure_cushions(
    net: Network,
    dataset: Dataset,
    relative_noise: float = 0.05,
    draws: int = 16,
    delta: float = 0.1,
    seed: int = 0,
) -> CushionReport:
    """Measure every cushion quantity over the dataset.

    Reports are flagged unreliable when more than 10% of the per-layer
    measurements had to skip degenerate (zero-activation) samples.
    """
    d = net.depth
    mu = []
    skipped_total = 0
    used_total = 0
    for i in range(1, d + 1):
        value, skipped, used = _layer_cushion_detail(net, dataset, i)
        if used == 0:
            raise DomainError(f"every sample feeds layer {i} a zero activation vector")
        mu.append(value)
        skipped_total += skipped
        used_total += used
    inter = np.full((d, d), math.nan)
    for i in range(1, d + 1):
        for j in range(i, d + 1):
            value, skipped, used = _interlayer_cushion_detail(net, dataset, i, j)
            if used == 0:
                raise DomainError(f"every sample has a zero pre-activation at layer {i}")
            inter[i - 1, j - 1] = value
            skipped_total += skipped
            used_total += used
    mu_min = []
    for i in range(1, d + 1):
        best = 1.0 / math.sqrt(net.hidden_dim(i))
        for j in range(i + 1, d + 1):
            best = min(best, float(inter[i - 1, j - 1]))
        mu_min.append(best)
    contraction, degenerate = _activation_contraction_detail(net, dataset)
    skipped_total += degenerate
    used_total += max(dataset.size * max(d - 1, 0) - degenerate, 0)
    rho = interlayer_smoothness(
        net, dataset, relative_noise=relative_noise, draws=draws, delta=delta, seed=seed
    )
    logits, _ = forward_dataset(net, dataset.inputs)
    f_max = float(np.max(np.linalg.norm(logits, axis=1)))
    skipped_fraction = skipped_total / max(skipped_total + used_total, 1)
    return CushionReport(
        mu_per_layer=tuple(mu),
        mu_interlayer=tuple(tuple(float(v) for v in row) for row in inter),
        mu_min_interlayer=tuple(mu_min),
        contraction_c=contraction,
        smoothness_rho=rho,
        f_max=f_max,
        skipped_fraction=float(skipped_fraction),
        reliable=skipped_fraction <= 0.10,
    )


@dataclass(frozen=True)
class LayerPlan:
    """Per-layer compression targets; ``tau``/``t`` override the solved values."""

    epsilon: float = 1.0
    eta: float = 0.1
    tau: float | None = None
    t: float | None = None
    tau_quantile: float = 0.95


@dataclass(frozen=True)
class LayerCompressionRecord:
    layer: int
    epsilon: float | None
    eta: float | None
    tau: float
    t: float
    lam: float
    k: int
    mode: str
    tau_reduced: bool = False


@dataclass(frozen=True)
class CompressionResult:
    compressed: Network
    k_per_layer: tuple
    records: tuple

    @property
    def total_sparsity(self) -> int:
        return sum(self.k_per_layer)


def cushion_scaled_plans(
    report: CushionReport, epsilon: float, delta: float, m: int, h: int
) -> dict:
    """Per-layer targets that split a whole-network error budget.

    Layer ``i`` receives ``eps_i = eps * mu_i * mu_{i->} / (6 c d)`` and the
    failure probability ``delta / (2 d m h d)``, matching the inductive
    accounting that turns per-layer substitution errors into a whole-network
    relative error of at most ``eps``.
    """
    d = len(report.mu_per_layer)
    eta = delta / (2.0 * d * m * h * d)
    plans = {}
    for i in range(1, d + 1):
        eps_i = (
            epsilon
            * report.mu_per_layer[i - 1]
            * report.mu_min_interlayer[i - 1]
            / (6.0 * report.contraction_c * d)
        )
        plans[i] = LayerPlan(epsilon=eps_i, eta=eta)
    return plans


def compress_network(
    net: Network,
    mode: str = "theory",
    layer_plans: dict | None = None,
    seed: int = 0,
) -> CompressionResult:
    """Replace each planned layer with its Gaussian substitute.

    ``theory`` keeps the entries beyond a cutoff and swaps everything else
    for zero-mean normals whose variance spends the per-layer error budget
    (cutoff defaults to the 0.95 magnitude quantile, auto-reduced with a
    warning when infeasible; an explicitly requested infeasible cutoff
    raises).  ``stddev`` cuts at the standard deviation of the magnitudes and
    redraws the replaced entries with their own empirical mean and deviation.

    Layers absent from ``layer_plans`` are kept verbatim; their sparsity is
    the full entry count since nothing about them was compressed away.
    """
    if mode not in ("theory", "stddev"):
        raise ValidationError(f"unknown compression mode {mode!r}")
    if layer_plans is None:
        layer_plans = {i: LayerPlan() for i in range(1, net.depth + 1)}
    for index in layer_plans:
        _check_layer_index(net, index)
    layer_seeds = np.random.SeedSequence(seed).generate_state(net.depth)
    new_weights = []
    k_per_layer = []
    records = []
    for i in range(1, net.depth + 1):
        W = net.weights[i - 1]
        if i not in layer_plans:
            new_weights.append(W)
            k_per_layer.append(W.size)
            continue
        plan = layer_plans[i]
        layer_seed = int(layer_seeds[i - 1])
        if mode == "stddev":
            tau = plan.tau if plan.tau is not None else float(np.std(np.abs(W)))
            if tau <= 0:
                raise ValidationError(f"layer {i} has a degenerate magnitude deviation")
            split = split_by_threshold(W, tau, mode="signed-absolute")
            compressed = gaussian_substitute(split, mode="moment-matched", seed=layer_seed)
            record = LayerCompressionRecord(
                layer=i,
                epsilon=None,
                eta=None,
                tau=tau,
                t=compressed.t,
                lam=2.0 / (tau**2 + compressed.t),
                k=nnz(split.high),
                mode=mode,
            )
        else:
            tau_reduced = False
            tau = plan.tau if plan.tau is not None else float(np.quantile(np.abs(W), plan.tau_quantile))
            if plan.t is not None:
                if plan.t < 0:
                    raise DomainError(f"layer {i}: variance must be non-negative")
                if tau <= 0:
                    raise DomainError(f"layer {i}: cutoff must be positive")
                t = plan.t
            else:
                try:
                    t = solve_variance_t(plan.epsilon, plan.eta, tau, mode="conservative")
                except InfeasibleThresholdError as exc:
                    if plan.tau is not None:
                        raise InfeasibilityError(
                            f"layer {i}: requested cutoff is infeasible ({exc})"
                        ) from exc
                    warnings.warn(
                        f"layer {i}: cutoff {tau:.6g} infeasible for "
                        f"(epsilon={plan.epsilon}, eta={plan.eta}); reduced to "
                        f"{exc.max_feasible_tau:.6g}",
                        stacklevel=2,
                    )
                    tau = exc.max_feasible_tau
                    tau_reduced = True
                    t = 0.0
            split = split_by_threshold(W, tau, mode="signed-absolute")
            compressed = gaussian_substitute(split, t=t, mode="theory", seed=layer_seed)
            record = LayerCompressionRecord(
                layer=i,
                epsilon=plan.epsilon,
                eta=plan.eta,
                tau=tau,
                t=t,
                lam=2.0 / (tau**2 + t),
                k=nnz(split.high),
                mode=mode,
                tau_reduced=tau_reduced,
            )
        new_weights.append(compressed.realized)
        k_per_layer.append(record.k)
        records.append(record)
    compressed_net = replace(net, weights=tuple(new_weights))
    return CompressionResult(
        compressed=compressed_net,
        k_per_layer=tuple(int(k) for k in k_per_layer),
        records=tuple(records),
    )


def save_network(directory, net: Network, name: str = "network") -> Path:
    """Write the weight archive plus a sidecar recording the augmentation flag."""
    directory = Path(directory)
    layers = [(f"layer_{i}", w) for i, w in enumerate(net.weights, start=1)]
    archive_io.write_archive(directory, name, layers, dtype="f64")
    sidecar = {"augment_input": bool(net.augment_input)}
    (directory / NETWORK_SIDECAR).write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")
    return directory


def load_network(directory) -> Network:
    """Rebuild a network from an archive directory written by :func:`save_network`.

    Plain weight archives (no sidecar) load with augmentation disabled.
    """
    directory = Path(directory)
    archive = archive_io.load_archive(directory)
    sidecar_path = directory / NETWORK_SIDECAR
    augment = False
    if sidecar_path.is_file():
        augment = bool(json.loads(sidecar_path.read_text()).get("augment_input", False))
    return Network(
        weights=tuple(layer.matrix for layer in archive.layers), augment_input=augment
    )
