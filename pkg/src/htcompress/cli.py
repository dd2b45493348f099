"""Command-line front end.

One process per command, all randomness from explicit ``--seed`` flags, and
byte-identical primary outputs on identical invocations.  Validation problems
exit with code 1, infeasible or out-of-validity requests with code 2; both
write a machine-readable error object to stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import archive as archive_io
from . import bounds, fcnn, matrices, powerlaw, verify
from .errors import HtcError, InfeasibilityError, ValidationError, ValidityError

USAGE_ERROR = 1
INFEASIBLE_ERROR = 2


class _UsageError(Exception):
    def __init__(self, parser: argparse.ArgumentParser, message: str):
        super().__init__(message)
        self.parser = parser


class _Parser(argparse.ArgumentParser):
    """argparse that reports bad usage through the CLI error protocol."""

    def error(self, message):
        raise _UsageError(self, message)


def _json_safe(obj):
    if isinstance(obj, dict):
        return {key: _json_safe(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(value) for value in obj]
    if isinstance(obj, (np.floating, np.integer)):
        obj = obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def _write_json(path, payload) -> None:
    text = json.dumps(_json_safe(payload), indent=2, sort_keys=True) + "\n"
    Path(path).write_text(text)


def _emit(payload, json_path=None) -> None:
    text = json.dumps(_json_safe(payload), indent=2, sort_keys=True)
    print(text)
    if json_path:
        Path(json_path).write_text(text + "\n")


def _load_matrix(args) -> np.ndarray:
    if getattr(args, "matrix", None):
        return archive_io.read_matrix_csv(args.matrix)
    archive = archive_io.load_archive(args.archive)
    layer = archive.layer(args.layer) if getattr(args, "layer", None) else archive.final_layer
    return layer.matrix


def _int_list(text: str) -> list[int]:
    return [int(part) for part in text.split(",") if part]


def _float_list(text: str) -> list[float]:
    return [float(part) for part in text.split(",") if part]


def _linspace_spec(text: str) -> list[float]:
    """Parse ``start:stop:count`` into evenly spaced values."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ValidationError(f"expected start:stop:count, got {text!r}")
    start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
    if count < 1:
        raise ValidationError("grid axis needs at least one point")
    return [float(v) for v in np.linspace(start, stop, count)]


def _int_range_spec(text: str) -> list[int]:
    """Parse ``lo:hi`` (inclusive) or a comma list into integers."""
    if ":" in text:
        lo, hi = (int(part) for part in text.split(":"))
        return list(range(lo, hi + 1))
    return _int_list(text)


# ---------------------------------------------------------------- commands


def _cmd_fit(args) -> int:
    matrix = _load_matrix(args)
    fit = powerlaw.fit_alpha_mle(matrix.ravel(), w_min=args.w_min)
    _emit(
        {
            "alpha_hat": fit.alpha_hat,
            "density_exponent": fit.density_exponent,
            "w_min_used": fit.w_min_used,
            "n_tail": fit.n_tail,
            "fit_on": "magnitudes",
            "config": {"archive": getattr(args, "archive", None), "layer": args.layer,
                       "matrix": getattr(args, "matrix", None), "w_min": args.w_min},
        },
        args.json,
    )
    return 0


def _cmd_split(args) -> int:
    matrix = _load_matrix(args)
    split = matrices.split_by_threshold(matrix, args.tau, mode=args.mode)
    if args.out_dir:
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        archive_io.write_matrix_csv(out / "low.csv", split.low)
        with (out / "high.csv").open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["row", "col", "value"])
            for r, c, v in zip(split.high.row_idx, split.high.col_idx, split.high.values):
                writer.writerow([int(r), int(c), repr(float(v))])
    _emit(
        {
            "rows": matrix.shape[0],
            "cols": matrix.shape[1],
            "tau": args.tau,
            "mode": args.mode,
            "nnz_high": split.high.nnz,
            "frobenius_low": matrices.frobenius_norm(split.low),
            "frobenius_high": matrices.frobenius_norm(split.high),
        },
        args.json,
    )
    return 0


def _layer_plans_from_args(net: fcnn.Network, args) -> dict:
    if args.layers == "all":
        indices = range(1, net.depth + 1)
    elif args.layers == "final":
        indices = [net.depth]
    else:
        indices = _int_list(args.layers)
    plan = fcnn.LayerPlan(epsilon=args.epsilon, eta=args.eta, tau=args.tau)
    return {i: plan for i in indices}


def _cmd_compress(args) -> int:
    net = fcnn.load_network(args.archive)
    plans = _layer_plans_from_args(net, args)
    result = fcnn.compress_network(net, mode=args.mode, layer_plans=plans, seed=args.seed)
    fcnn.save_network(args.out_dir, result.compressed, name=f"{Path(args.archive).name}-compressed")
    records = [
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
        for rec in result.records
    ]
    _emit(
        {
            "k_per_layer": list(result.k_per_layer),
            "total_sparsity": result.total_sparsity,
            "records": records,
            "out_dir": str(args.out_dir),
            "seed": args.seed,
        },
        args.json,
    )
    return 0


def _cmd_bounds_sparsity(args) -> int:
    inp = bounds.SparsityBoundInput(n=args.n, p=args.p, k=args.k)
    bound = bounds.sparsity_tail_bound(inp)
    exact = bounds.binomial_tail_exact(args.n, args.p, args.k)
    print(f"{bound:.6f}")
    print(f"{exact:.6f}")
    if args.json:
        _write_json(args.json, {"n": args.n, "p": args.p, "k": args.k, "bound": bound, "exact": exact})
    return 0


def _cmd_bounds_concentration(args) -> int:
    t = bounds.solve_variance_t(args.epsilon, args.eta, args.tau, mode=args.mode)
    lam = 2.0 / (args.tau**2 + t)
    payload = {"epsilon": args.epsilon, "eta": args.eta, "tau": args.tau, "mode": args.mode,
               "t": t, "lambda": lam}
    if args.s is not None:
        raw = 3.0 * math.exp(-(args.s**2) / (2.0 * args.uv_frobenius**2 * (args.tau**2 + t)))
        payload["tail_at_s"] = bounds.concentration_tail(args.s, args.uv_frobenius, args.tau, t)
        payload["tail_at_s_raw"] = raw
    _emit(payload, args.json)
    return 0


def _cmd_bounds_simple(args) -> int:
    result = bounds.simple_generalization_bound(
        bounds.GenBoundInput(
            k_per_layer=tuple(_int_list(args.k_per_layer)),
            m=args.m,
            margin_loss=args.margin_loss,
            r=args.r,
            constant_C=args.C,
        )
    )
    _emit(
        {
            "q": result.q,
            "m": result.m,
            "r": result.r,
            "constant_C": result.constant_C,
            "margin_loss": result.margin_loss,
            "complexity_term": result.complexity_term,
            "total": result.total,
        },
        args.json,
    )
    return 0


def _cmd_bounds_dudley(args) -> int:
    value = bounds.dudley_integral(args.q, args.kappa, args.D)
    _emit(
        {
            "q": args.q,
            "kappa": args.kappa,
            "D": args.D,
            "value": value,
            "lower_limit": max(float(np.finfo(float).eps), 1e-9 * args.D),
            "lower_limit_note": "quadrature runs above this point; the integrable "
                                "head below it is added analytically",
        },
        args.json,
    )
    return 0


def _cmd_cushions(args) -> int:
    net = fcnn.load_network(args.archive)
    dataset = archive_io.load_dataset(args.data)
    report = fcnn.measure_cushions(
        net, dataset, relative_noise=args.relative_noise, draws=args.draws,
        delta=args.delta, seed=args.seed,
    )
    _emit(
        {
            "mu_per_layer": list(report.mu_per_layer),
            "mu_interlayer": [list(row) for row in report.mu_interlayer],
            "mu_min_interlayer": list(report.mu_min_interlayer),
            "contraction_c": report.contraction_c,
            "smoothness_rho": report.smoothness_rho,
            "f_max": report.f_max,
            "skipped_fraction": report.skipped_fraction,
            "reliable": report.reliable,
            "relu_exact": report.relu_exact,
            "config": {
                "archive": args.archive,
                "data": args.data,
                "relative_noise": args.relative_noise,
                "draws": args.draws,
                "delta": args.delta,
                "seed": args.seed,
            },
        },
        args.json,
    )
    return 0


def _cmd_stable_rank(args) -> int:
    matrix = _load_matrix(args)
    value = matrices.stable_rank(matrix, iterations=args.iterations)
    _emit(
        {
            "stable_rank": value,
            "frobenius": matrices.frobenius_norm(matrix),
            "spectral": matrices.spectral_norm(matrix, iterations=args.iterations),
            "iterations": args.iterations,
        },
        args.json,
    )
    return 0


def _cmd_sweep(args) -> int:
    archive_dirs = list(args.archive or [])
    if args.plant_alphas:
        plant_dir = Path(args.plant_dir or "planted")
        seeds = np.random.SeedSequence(args.seed).generate_state(args.plant_count)
        for alpha in _float_list(args.plant_alphas):
            for index in range(args.plant_count):
                target = plant_dir / f"alpha{alpha:g}_seed{index}"
                verify.make_planted_archive(
                    target, alpha=alpha, rows=args.plant_rows, cols=args.plant_cols,
                    seed=int(seeds[index]),
                )
                archive_dirs.append(target)
    if not archive_dirs:
        raise ValidationError("no archives to sweep: pass --archive or --plant-alphas")
    rows = verify.stable_rank_alpha_sweep(archive_dirs)
    if args.csv:
        with Path(args.csv).open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["name", "alpha_fit", "stable_rank"])
            for row in rows:
                writer.writerow([row.name, repr(row.alpha_fit), repr(row.stable_rank)])
    payload = {
        "rows": [{"name": r.name, "alpha_fit": r.alpha_fit, "stable_rank": r.stable_rank}
                 for r in rows],
        "config": {
            "plant_alphas": args.plant_alphas,
            "plant_count": args.plant_count,
            "plant_rows": args.plant_rows,
            "plant_cols": args.plant_cols,
            "em_components": args.em_components,
            "seed": args.seed,
        },
    }
    if args.em_components and len(rows) >= 2 * args.em_components:
        points = [(r.alpha_fit, r.stable_rank) for r in rows]
        fit = verify.fit_linear_mixture_em(points, n_components=args.em_components, seed=args.seed)
        payload["em_fit"] = {
            "components": [
                {"slope": c.slope, "intercept": c.intercept, "noise_std": c.noise_std, "weight": c.weight}
                for c in fit.components
            ],
            "log_likelihood": fit.log_likelihood,
            "iterations": fit.iterations,
        }
    _emit(payload, args.json)
    return 0


def _cmd_contour(args) -> int:
    alphas = _linspace_spec(args.alphas)
    brackets = _int_range_spec(args.brackets)
    cells = bounds.contour_grid(alphas, brackets, scale_c=args.scale_c, M=args.M, N=args.N)
    rows = bounds.grid_rows(cells)
    if args.csv:
        with Path(args.csv).open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["alpha", "bracket", "p", "kappa_count", "bound", "valid"])
            for row in rows:
                writer.writerow([
                    repr(row["alpha"]), row["bracket"], repr(row["p"]),
                    repr(row["kappa_count"]),
                    "" if math.isnan(row["bound"]) else repr(row["bound"]),
                    row["valid"],
                ])
    valid = sum(1 for row in rows if row["valid"])
    json_rows = [
        dict(row, bound=row["bound"] if row["valid"] else None) for row in rows
    ]
    _emit(
        {"cells": len(rows), "valid_cells": valid, "rows": json_rows,
         "config": {"scale_c": args.scale_c, "M": args.M, "N": args.N,
                    "alphas": args.alphas, "brackets": args.brackets}},
        args.json,
    )
    return 0


def _report_payload(report: verify.VerificationReport) -> dict:
    return {
        "name": report.name,
        "trials": report.trials,
        "failures": report.failures,
        "empirical_rate": report.empirical_rate,
        "bound_target": report.bound_target,
        "slack": report.slack,
        "passed": report.passed,
        "details": report.details,
    }


def _cmd_verify(args) -> int:
    if args.harness == "concentration":
        report = verify.verify_concentration(
            alpha=args.alpha, w_min=args.w_min, shape=(args.rows, args.cols),
            epsilon=args.epsilon, eta=args.eta, mode=args.mode,
            trials=args.trials, seed=args.seed, tau=args.tau,
        )
    elif args.harness == "sparsity":
        report = verify.verify_sparsity(
            alpha=args.alpha, w_min=args.w_min, tau=args.tau, n=args.n, k=args.k,
            trials=args.trials, seed=args.seed,
        )
    else:
        report = verify.verify_spiked_expectation(
            alpha=args.alpha, w_min=args.w_min, tau=args.tau,
            x=np.asarray(_float_list(args.x)), trials=args.trials, seed=args.seed,
        )
    _emit(_report_payload(report), args.json)
    print(f"{report.name}: {'PASS' if report.passed else 'FAIL'}", file=sys.stderr)
    return 0


def _cmd_train_toy(args) -> int:
    shape = _int_list(args.shape)
    total = args.m + args.heldout
    data = fcnn.make_blobs(total, dim=shape[0], classes=shape[-1], seed=args.seed)
    train = fcnn.Dataset(data.inputs[: args.m], data.labels[: args.m], data.class_count)
    test = fcnn.Dataset(data.inputs[args.m :], data.labels[args.m :], data.class_count)
    net = fcnn.train_sgd(
        shape, train, step_size=args.step_size, batch_size=args.batch_size,
        epochs=args.epochs, seed=args.seed,
    )
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    archive_io.save_dataset(out / "train.csv", train.inputs, train.labels, train.class_count)
    archive_io.save_dataset(out / "test.csv", test.inputs, test.labels, test.class_count)
    fcnn.save_network(out / "net", net, name="toy-fcnn")
    _emit(
        {
            "shape": shape,
            "m": args.m,
            "heldout": args.heldout,
            "train_accuracy": fcnn.accuracy(net, train),
            "test_accuracy": fcnn.accuracy(net, test),
            "out_dir": str(out),
            "seed": args.seed,
        },
        args.json,
    )
    return 0


def _cmd_experiment(args) -> int:
    dataset = archive_io.load_dataset(args.data)
    row = verify.accuracy_experiment(
        args.archive, dataset, trials=args.trials, seed=args.seed,
        model_name=args.model_name,
    )
    dataset_name = args.dataset_name or Path(args.data).stem
    if args.csv:
        with Path(args.csv).open("w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["architecture", "dataset", "alpha_fit", "original_accuracy",
                 "compressed_mean", "compressed_std"]
            )
            writer.writerow(
                [row.model_name, dataset_name, repr(row.alpha_fit), repr(row.original_accuracy),
                 repr(row.compressed_mean), repr(row.compressed_std)]
            )
    _emit(
        {
            "architecture": row.model_name,
            "dataset": dataset_name,
            "alpha_fit": row.alpha_fit,
            "original_accuracy": row.original_accuracy,
            "compressed_mean": row.compressed_mean,
            "compressed_std": row.compressed_std,
            "trials": row.trials,
            "seed": args.seed,
        },
        args.json,
    )
    return 0


def _cmd_report(args) -> int:
    net = fcnn.load_network(args.archive)
    dataset = archive_io.load_dataset(args.data)
    plans = None
    if args.epsilon is not None or args.eta is not None:
        plan = fcnn.LayerPlan(
            epsilon=args.epsilon if args.epsilon is not None else 1.0,
            eta=args.eta if args.eta is not None else 0.1,
        )
        plans = {i: plan for i in range(1, net.depth + 1)}
    report = verify.end_to_end_bound_report(
        net, dataset, gamma=args.gamma, r=args.r, constant_C=args.C,
        mode=args.mode, layer_plans=plans, seed=args.seed, dudley_D=args.dudley_D,
    )
    _emit(report.to_json_dict(), args.json)
    return 0


# ---------------------------------------------------------------- parser


def _add_seed(parser, default=0):
    parser.add_argument("--seed", type=int, default=default, help="master seed (default %(default)s)")


def _add_json(parser):
    parser.add_argument("--json", type=str, default=None, help="also write the JSON payload here")


def _add_matrix_source(parser, required=True):
    group = parser.add_mutually_exclusive_group(required=required)
    group.add_argument("--archive", type=str, help="weight-archive directory")
    group.add_argument("--matrix", type=str, help="headerless CSV matrix")
    parser.add_argument("--layer", type=str, default=None,
                        help="layer name inside the archive (default: final layer)")


def build_parser() -> argparse.ArgumentParser:
    # @file arguments let a run config live in a file, one token per line;
    # unknown keys in the file are rejected exactly like unknown flags
    parser = _Parser(prog="htcompress", description=__doc__, fromfile_prefix_chars="@")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", parents=[], help="tail-exponent fit of a layer's magnitudes")
    _add_matrix_source(p)
    p.add_argument("--w-min", type=float, default=None,
                   help="tail floor (default: deviation of the magnitudes)")
    _add_json(p)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("split", help="threshold split of a matrix")
    _add_matrix_source(p)
    p.add_argument("--tau", type=float, required=True)
    p.add_argument("--mode", choices=matrices.SPLIT_MODES, default="signed-absolute")
    p.add_argument("--out-dir", type=str, default=None, help="write low.csv / high.csv here")
    _add_json(p)
    p.set_defaults(func=_cmd_split)

    p = sub.add_parser("compress", help="compress a network archive")
    p.add_argument("--archive", type=str, required=True)
    p.add_argument("--out-dir", type=str, required=True)
    p.add_argument("--mode", choices=("theory", "stddev"), default="theory")
    p.add_argument("--epsilon", type=float, default=1.0)
    p.add_argument("--eta", type=float, default=0.1)
    p.add_argument("--tau", type=float, default=None, help="explicit cutoff override")
    p.add_argument("--layers", type=str, default="all",
                   help="'all', 'final', or a comma list of 1-based layer indices")
    _add_seed(p)
    _add_json(p)
    p.set_defaults(func=_cmd_compress)

    p = sub.add_parser("bounds", help="closed-form bound calculators")
    bsub = p.add_subparsers(dest="bound", required=True)

    b = bsub.add_parser("sparsity", help="spike-count tail bound and exact tail")
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--p", type=float, required=True)
    b.add_argument("--k", type=int, required=True)
    _add_json(b)
    b.set_defaults(func=_cmd_bounds_sparsity)

    b = bsub.add_parser("concentration", help="solve the substitution variance")
    b.add_argument("--epsilon", type=float, required=True)
    b.add_argument("--eta", type=float, required=True)
    b.add_argument("--tau", type=float, required=True)
    b.add_argument("--mode", choices=bounds.SOLVE_MODES, default="conservative")
    b.add_argument("--s", type=float, default=None, help="also evaluate the tail at this deviation")
    b.add_argument("--uv-frobenius", type=float, default=1.0)
    _add_json(b)
    b.set_defaults(func=_cmd_bounds_concentration)

    b = bsub.add_parser("simple", help="margin loss plus sparsity-count complexity")
    b.add_argument("--k-per-layer", type=str, required=True)
    b.add_argument("--m", type=int, required=True)
    b.add_argument("--margin-loss", type=float, required=True)
    b.add_argument("--r", type=int, default=2**16)
    b.add_argument("--C", type=float, default=1.0)
    _add_json(b)
    b.set_defaults(func=_cmd_bounds_simple)

    b = bsub.add_parser("dudley", help="entropy integral")
    b.add_argument("--q", type=float, required=True)
    b.add_argument("--kappa", type=float, required=True)
    b.add_argument("--D", type=float, required=True)
    _add_json(b)
    b.set_defaults(func=_cmd_bounds_dudley)

    p = sub.add_parser("cushions", help="measure network cushion constants")
    p.add_argument("--archive", type=str, required=True)
    p.add_argument("--data", type=str, required=True)
    p.add_argument("--relative-noise", type=float, default=0.05)
    p.add_argument("--draws", type=int, default=16)
    p.add_argument("--delta", type=float, default=0.1)
    _add_seed(p)
    _add_json(p)
    p.set_defaults(func=_cmd_cushions)

    p = sub.add_parser("stable-rank", help="stable rank via power iteration")
    _add_matrix_source(p)
    p.add_argument("--iterations", type=int, default=1000)
    _add_json(p)
    p.set_defaults(func=_cmd_stable_rank)

    p = sub.add_parser("sweep", help="stable rank vs tail fit across archives")
    p.add_argument("--archive", action="append", default=None)
    p.add_argument("--plant-alphas", type=str, default=None, help="comma list of exponents to plant")
    p.add_argument("--plant-count", type=int, default=5, help="planted archives per exponent")
    p.add_argument("--plant-rows", type=int, default=64)
    p.add_argument("--plant-cols", type=int, default=64)
    p.add_argument("--plant-dir", type=str, default=None)
    p.add_argument("--em-components", type=int, default=2)
    p.add_argument("--csv", type=str, default=None)
    _add_seed(p)
    _add_json(p)
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("contour", help="scale-bracket bound grid")
    p.add_argument("--scale-c", "--c", dest="scale_c", type=float, required=True)
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--alphas", type=str, required=True, help="start:stop:count")
    p.add_argument("--brackets", type=str, required=True, help="lo:hi or comma list")
    p.add_argument("--csv", type=str, default=None)
    _add_json(p)
    p.set_defaults(func=_cmd_contour)

    p = sub.add_parser("verify", help="Monte-Carlo verification harnesses")
    vsub = p.add_subparsers(dest="harness", required=True)

    v = vsub.add_parser("concentration")
    v.add_argument("--alpha", type=float, required=True)
    v.add_argument("--w-min", type=float, default=1.0)
    v.add_argument("--rows", type=int, required=True)
    v.add_argument("--cols", type=int, required=True)
    v.add_argument("--epsilon", type=float, required=True)
    v.add_argument("--eta", type=float, required=True)
    v.add_argument("--mode", choices=bounds.SOLVE_MODES, default="conservative")
    v.add_argument("--tau", type=float, default=None)
    v.add_argument("--trials", type=int, default=1000)
    _add_seed(v)
    _add_json(v)
    v.set_defaults(func=_cmd_verify)

    v = vsub.add_parser("sparsity")
    v.add_argument("--alpha", type=float, required=True)
    v.add_argument("--w-min", type=float, default=1.0)
    v.add_argument("--tau", type=float, required=True)
    v.add_argument("--n", type=int, required=True)
    v.add_argument("--k", type=int, required=True)
    v.add_argument("--trials", type=int, default=1000)
    _add_seed(v)
    _add_json(v)
    v.set_defaults(func=_cmd_verify)

    v = vsub.add_parser("spiked")
    v.add_argument("--alpha", type=float, required=True)
    v.add_argument("--w-min", type=float, default=1.0)
    v.add_argument("--tau", type=float, required=True)
    v.add_argument("--x", type=str, required=True, help="comma list of vector components")
    v.add_argument("--trials", type=int, default=100_000)
    _add_seed(v)
    _add_json(v)
    v.set_defaults(func=_cmd_verify)

    p = sub.add_parser("train-toy", help="train a toy blob classifier and save everything")
    p.add_argument("--out-dir", type=str, required=True)
    p.add_argument("--shape", type=str, default="20,32,32,4")
    p.add_argument("--m", type=int, default=2000)
    p.add_argument("--heldout", type=int, default=500)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--step-size", type=float, default=0.1)
    p.add_argument("--batch-size", type=int, default=32)
    _add_seed(p)
    _add_json(p)
    p.set_defaults(func=_cmd_train_toy)

    p = sub.add_parser("experiment", help="pre/post-compression accuracy row")
    p.add_argument("--archive", type=str, required=True)
    p.add_argument("--data", type=str, required=True)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--model-name", type=str, default=None)
    p.add_argument("--dataset-name", type=str, default=None)
    p.add_argument("--csv", type=str, default=None)
    _add_seed(p)
    _add_json(p)
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("report", help="end-to-end bound report")
    p.add_argument("--archive", type=str, required=True)
    p.add_argument("--data", type=str, required=True)
    p.add_argument("--gamma", type=float, required=True)
    p.add_argument("--r", type=int, default=2**16)
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--mode", choices=("theory", "stddev"), default="theory")
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--dudley-D", type=float, default=None)
    _add_seed(p)
    _add_json(p)
    p.set_defaults(func=_cmd_report)

    return parser


def _error_payload(exc: Exception) -> str:
    name = type(exc).__name__.lstrip("_")
    return json.dumps({"error": {"type": name, "message": str(exc)}}, sort_keys=True)


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        exc.parser.print_usage(sys.stderr)
        print(_error_payload(exc), file=sys.stderr)
        return USAGE_ERROR
    except (InfeasibilityError, ValidityError) as exc:
        print(_error_payload(exc), file=sys.stderr)
        return INFEASIBLE_ERROR
    except HtcError as exc:
        print(_error_payload(exc), file=sys.stderr)
        return USAGE_ERROR
    except OSError as exc:
        print(_error_payload(exc), file=sys.stderr)
        return USAGE_ERROR


if __name__ == "__main__":
    sys.exit(main())
