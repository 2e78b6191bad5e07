"""Command-line front end: theory evaluation, simulation, experiments and figure reproduction."""

from __future__ import annotations

import argparse
import os
import platform
import sys
import time
from importlib import metadata
from pathlib import Path

import numpy as np
import scipy

from . import io
from .figures import FIGURES, SCALES, reproduce
from .mc_harness import GRID_COLUMNS, QUANTITIES, ExperimentConfig, pls_vs_pca_grid, run_experiment
from .model_gen import Dimensions, ModelSpec, SignalSpectrum, rotation_2d, sample_pair
from .rmt_theory import (
    AspectRatios,
    build_common_kernel,
    bulk_law,
    dominance_margin,
    spike_law,
    spike_map_table,
    threshold_tau,
)
from .spectral_core import cross_covariance, extract_spikes, squared_singular_spectrum


def _floats(text: str) -> list[float]:
    text = text.strip()
    return [float(v) for v in text.split(",")] if text else []


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return value


# ---------------------------------------------------------------------------
# Model assembly from --config, numeric flags and --set overrides
# ---------------------------------------------------------------------------

_LIST_KEYS = {"lambdas_P", "lambdas_R", "lambdas_M", "lambdas_N", "rotation_P", "rotation_R"}


def _parse_override(item: str) -> tuple[str, object]:
    if "=" not in item:
        raise ValueError(f"override {item!r} is not of the form key=value")
    key, value = item.split("=", 1)
    key = key.strip()
    if key in _LIST_KEYS:
        return key, _floats(value)
    return key, int(value, 0)


def _model_from_args(args) -> ModelSpec:
    data: dict = {}
    if args.config:
        data = ModelSpec.load(args.config).to_dict()
    for key in ("n", "p", "q"):
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
    for key in ("lambdas_P", "lambdas_R", "lambdas_M", "lambdas_N"):
        value = getattr(args, key, None)
        if value is not None:
            data[key] = _floats(value)
    if getattr(args, "rotation_deg", None) is not None:
        r = len(data.get("lambdas_P", []))
        if r != 2:
            raise ValueError("--rotation-deg needs a common rank of 2")
        data["rotation_R"] = rotation_2d(args.rotation_deg).ravel().tolist()
        data["rotation_P"] = np.eye(2).ravel().tolist()
    for item in getattr(args, "set", None) or []:
        key, value = _parse_override(item)
        data[key] = value
    if args.seed is not None:
        data["seed"] = args.seed
    for key in ("r", "r_M", "r_N"):
        data.pop(key, None)
    if not {"n", "p", "q"} <= set(data):
        raise ValueError("the model needs n, p and q (from --config or flags)")
    r = len(data.get("lambdas_P", []))
    for key in ("rotation_P", "rotation_R"):
        if key in data and len(data[key]) != r * r:
            data.pop(key)
    return ModelSpec.from_dict(data)


def _ratios(args) -> AspectRatios:
    return AspectRatios(args.beta_p, args.beta_q)


# ---------------------------------------------------------------------------
# Subcommands; each returns (summary dict, list of written paths)
# ---------------------------------------------------------------------------


def cmd_theory_bulk(args):
    law = bulk_law(_ratios(args))
    summary = {**law.to_dict(), "total_mass": law.total_mass()}
    out = Path(args.out)
    paths = [io.write_json(out / "bulk.json", summary),
             io.write_csv(out / "density.csv", law.density_table(args.points), ["x", "f", "F"])]
    print(io.to_json_text({k: summary[k] for k in ("x_minus", "x_plus", "atom0")}), end="")
    return summary, paths


def cmd_theory_threshold(args):
    ratios = _ratios(args)
    tau = threshold_tau(ratios)
    m, _, margin = dominance_margin(ratios)
    summary = {**ratios.to_dict(), "tau": tau, "pca_bound": m, "margin": margin}
    print(repr(tau))
    return summary, [io.write_json(Path(args.out) / "threshold.json", summary)]


def cmd_theory_spikes(args):
    ratios = _ratios(args)
    if args.lambdas:
        lams = _floats(args.lambdas)
    else:
        lams = np.linspace(args.lambda_min, args.lambda_max, args.points).tolist()
    rows = spike_map_table(ratios, lams)
    cols = ["lambda", "xi", "zeta_P", "zeta_R", "zeta_M", "zeta_N"]
    summary = {**ratios.to_dict(), "tau": threshold_tau(ratios), "points": len(rows)}
    paths = [io.write_csv(Path(args.out) / "spike_map.csv", rows, cols),
             io.write_json(Path(args.out) / "spike_map.json", summary)]
    return summary, paths


def cmd_theory_align(args):
    ratios = _ratios(args)
    lp, lr = _floats(args.lambdas_P or ""), _floats(args.lambdas_R or "")
    kernel = None
    if lp or lr:
        if len(lp) != len(lr):
            raise ValueError("--lambdas-P and --lambdas-R must have equal lengths")
        K_P = np.diag(lp)
        rot = rotation_2d(args.rotation_deg) if args.rotation_deg is not None else np.eye(len(lr))
        K_R = rot @ np.diag(lr) @ rot.T
        kernel = build_common_kernel(K_P, K_R)
    law = spike_law(ratios, _floats(args.lambdas_M or ""), _floats(args.lambdas_N or ""), kernel)
    summary = law.to_dict()
    print(io.to_json_text(summary), end="")
    return summary, [io.write_json(Path(args.out) / "spike_law.json", summary)]


def cmd_simulate(args):
    spec = _model_from_args(args)
    pair = sample_pair(spec, args.trial)
    law = bulk_law(spec.dims.ratios())
    report = squared_singular_spectrum(cross_covariance(pair), min(args.top_k, spec.dims.d),
                                       x_minus=law.x_minus, x_plus=law.x_plus)
    spikes = extract_spikes(report, law.x_plus, args.margin)
    out = Path(args.out)
    summary = {"model": spec.to_dict(), "trial": args.trial, "x_plus": law.x_plus,
               "spikes": [{"index": i, "value": v} for i, v in spikes]}
    paths = [io.write_csv(out / "spectrum.csv", report.csv_rows(), ["index", "squared_singular_value"]),
             io.write_json(out / "spectrum.json", {**summary, **report.to_dict()}),
             io.write_json(out / "model.json", spec.to_dict())]
    return summary, paths


def cmd_experiment(args):
    spec = _model_from_args(args)
    quantities = set(args.quantities.split(",")) if args.quantities else None
    kwargs = {"quantities": quantities} if quantities else {}
    if args.signal == "fixed" and not quantities:
        kwargs["quantities"] = QUANTITIES
    config = ExperimentConfig(spec, args.trials, args.margin, signal=args.signal,
                              resolvent_offset=args.resolvent_offset, **kwargs)
    report = run_experiment(config, args.threads)
    paths = report.write(args.out)
    summary = report.to_dict()
    summary.pop("trial_summaries")
    return summary, paths


def cmd_compare_pca(args):
    ratios = _ratios(args)
    lam = np.linspace(args.lambda_min, args.lambda_max, args.points)
    grid = pls_vs_pca_grid(ratios, lam, lam)
    m, tau, margin = dominance_margin(ratios)
    detect = grid.pca_detects
    summary = {
        **ratios.to_dict(), "tau": tau, "pca_bound": m, "margin": margin,
        "min_difference_where_pca_detects": float(grid.difference[detect].min()) if detect.any() else None,
        "positive_fraction": float((grid.difference > 0).mean()),
        "pls_contour": grid.pls_contour(), "pca_thresholds": list(grid.pca_thresholds()),
    }
    out = Path(args.out)
    paths = [io.write_csv(out / "grid.csv", grid.rows(), GRID_COLUMNS), io.write_json(out / "grid.json", summary)]
    return summary, paths


def cmd_reproduce(args):
    seed = args.seed if args.seed is not None else 0
    summary = reproduce(args.figure, args.out, args.scale, seed, args.threads)
    paths = sorted(p for p in Path(args.out).iterdir() if p.name.startswith(args.figure))
    return summary, paths


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", default="out", help="output directory (default: ./out)")
    p.add_argument("--seed", type=_seed, default=None, help="unsigned 64-bit seed")
    p.add_argument("--threads", type=_positive_int, default=None, help="worker threads (default: all cores)")
    p.add_argument("--config", default=None, help="TOML or JSON model description")
    p.add_argument("--scale", choices=sorted(SCALES), default="desk", help="experiment scale")


def _add_ratios(p: argparse.ArgumentParser) -> None:
    p.add_argument("--beta-p", type=float, required=True, help="n/p")
    p.add_argument("--beta-q", type=float, required=True, help="n/q")


def _add_model(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n", type=_positive_int)
    p.add_argument("--p", type=_positive_int)
    p.add_argument("--q", type=_positive_int)
    p.add_argument("--lambdas-P", dest="lambdas_P", help="comma-separated eigenvalues of K_P")
    p.add_argument("--lambdas-R", dest="lambdas_R", help="comma-separated eigenvalues of K_R")
    p.add_argument("--lambdas-M", dest="lambdas_M", help="comma-separated eigenvalues of K_M")
    p.add_argument("--lambdas-N", dest="lambdas_N", help="comma-separated eigenvalues of K_N")
    p.add_argument("--rotation-deg", type=float, help="relative rotation of the K_R eigenbasis (rank 2)")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one model field")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plsrmt", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("theory-bulk", help="support edges, atom and density of the noise bulk")
    _add_ratios(p)
    p.add_argument("--points", type=_positive_int, default=400)
    _add_common(p)
    p.set_defaults(func=cmd_theory_bulk)

    p = sub.add_parser("theory-threshold", help="detection threshold tau")
    _add_ratios(p)
    _add_common(p)
    p.set_defaults(func=cmd_theory_threshold)

    p = sub.add_parser("theory-spikes", help="spike locations and alignments as functions of lambda")
    _add_ratios(p)
    p.add_argument("--lambdas", help="comma-separated signal strengths")
    p.add_argument("--lambda-min", type=float, default=0.1)
    p.add_argument("--lambda-max", type=float, default=60.0)
    p.add_argument("--points", type=_positive_int, default=200)
    _add_common(p)
    p.set_defaults(func=cmd_theory_spikes)

    p = sub.add_parser("theory-align", help="predictions for every component of one model")
    _add_ratios(p)
    p.add_argument("--lambdas-P", dest="lambdas_P")
    p.add_argument("--lambdas-R", dest="lambdas_R")
    p.add_argument("--lambdas-M", dest="lambdas_M")
    p.add_argument("--lambdas-N", dest="lambdas_N")
    p.add_argument("--rotation-deg", type=float)
    _add_common(p)
    p.set_defaults(func=cmd_theory_align)

    p = sub.add_parser("simulate", help="draw one pair and write its cross-covariance spectrum")
    _add_model(p)
    p.add_argument("--trial", type=int, default=0, help="noise stream index")
    p.add_argument("--top-k", type=int, default=5)
    p.add_argument("--margin", type=float, default=0.05)
    _add_common(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("experiment", help="Monte-Carlo comparison with the theory")
    _add_model(p)
    p.add_argument("--trials", type=_positive_int, default=10)
    p.add_argument("--margin", type=float, default=0.05)
    p.add_argument("--quantities", help=f"comma-separated subset of {sorted(QUANTITIES)}")
    p.add_argument("--signal", choices=("resample", "fixed"), default="resample")
    p.add_argument("--resolvent-offset", type=float, default=1.0)
    _add_common(p)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("compare-pca", help="rank-one PLS versus PCA alignment grid")
    _add_ratios(p)
    p.add_argument("--lambda-min", type=float, default=0.1)
    p.add_argument("--lambda-max", type=float, default=10.0)
    p.add_argument("--points", type=_positive_int, default=100)
    _add_common(p)
    p.set_defaults(func=cmd_compare_pca)

    p = sub.add_parser("reproduce", help="regenerate one of the standard figures")
    p.add_argument("figure", choices=FIGURES)
    _add_common(p)
    p.set_defaults(func=cmd_reproduce)
    return parser


def _versions() -> dict:
    try:
        pkg = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        pkg = "unknown"
    return {"python": platform.python_version(), "numpy": np.__version__, "scipy": scipy.__version__, "plsrmt": pkg}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        if not os.access(out, os.W_OK):
            raise PermissionError(f"output directory {out} is not writable")
        start = time.perf_counter()
        summary, paths = args.func(args)
        wall = time.perf_counter() - start
    except (ValueError, OSError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"plsrmt {args.command}: error: {exc}", file=sys.stderr)
        return 1
    inputs = {k: v for k, v in vars(args).items() if k != "func"}
    manifest = {
        "command": args.command,
        "argv": list(sys.argv[1:] if argv is None else argv),
        "inputs": inputs,
        "seed": args.seed,
        "versions": _versions(),
        "wall_time_s": wall,
        "outputs": sorted(str(Path(p).name) for p in paths),
    }
    io.write_json(out / "manifest.json", manifest)
    return 0


if __name__ == "__main__":
    sys.exit(main())
