"""Monte-Carlo experiments comparing empirical PLS spectra with the asymptotic theory."""

from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from . import io
from .model_gen import DataPair, ModelSpec, build_signal_factors, rng_stream, sample_pair
from .rmt_theory import (
    AspectRatios,
    BulkLaw,
    SpikeLaw,
    align_common_diagonal,
    build_common_kernel,
    bulk_law,
    det_equiv_quadratic_forms,
    pca_alignment,
    skewed_direction,
    spike_law,
    stieltjes_m,
    threshold_tau,
)
from .spectral_core import (
    alignment_measure,
    cross_covariance,
    extract_spikes,
    full_svd,
    pca_top,
    resolvent_bilinear,
    resolvent_trace,
)

QUANTITIES = frozenset({"density", "spikes", "alignments", "mean_directions", "resolvent", "pca"})
DEFAULT_QUANTITIES = QUANTITIES - {"mean_directions"}


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelSpec
    trials: int = 10
    spike_margin: float = 0.05
    quantities: frozenset = DEFAULT_QUANTITIES
    resolvent_offset: float = 1.0  # z = x_plus + offset
    signal: str = "resample"
    bases: dict | None = field(default=None, compare=False)

    def __post_init__(self):
        if int(self.trials) != self.trials or self.trials < 1:
            raise ValueError(f"trials must be a positive integer, got {self.trials!r}")
        if self.spike_margin < 0:
            raise ValueError("spike_margin must be nonnegative")
        quantities = frozenset(self.quantities)
        unknown = quantities - QUANTITIES
        if unknown:
            raise ValueError(f"unknown quantities: {sorted(unknown)}")
        object.__setattr__(self, "quantities", quantities)
        if self.signal not in ("resample", "fixed"):
            raise ValueError(f"signal must be 'resample' or 'fixed', got {self.signal!r}")
        if self.signal == "resample" and "mean_directions" in quantities:
            raise ValueError("mean_directions needs signal='fixed': averaging over resampled signals is meaningless")

    def to_dict(self) -> dict:
        return {
            "model": self.model.to_dict(),
            "trials": self.trials,
            "spike_margin": self.spike_margin,
            "quantities": sorted(self.quantities),
            "resolvent_offset": self.resolvent_offset,
            "signal": self.signal,
            "structured_bases": sorted(self.bases) if self.bases else [],
        }

    def digest(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:12]


# ---------------------------------------------------------------------------
# Theory side, computed once per experiment
# ---------------------------------------------------------------------------


@dataclass
class _Target:
    component: str
    xi: float
    zeta_left: float
    zeta_right: float
    left: np.ndarray | None  # deterministic target of the left vector
    right: np.ndarray | None


@dataclass
class _Theory:
    ratios: AspectRatios
    bulk: BulkLaw
    law: SpikeLaw
    targets: list  # detected components, decreasing xi
    probes_right: dict
    probes_left: dict
    z: float
    m: complex
    bilinear: dict
    spurious_probe: np.ndarray


def _prepare(config: ExperimentConfig, factors, spec: ModelSpec | None = None) -> _Theory:
    spec = spec or config.model
    s = spec.spectrum
    ratios = spec.dims.ratios()
    bulk = bulk_law(ratios)
    kernel = build_common_kernel(s.K_P, s.K_R) if s.r else None
    law = spike_law(ratios, s.lambdas_M, s.lambdas_N, kernel)
    targets = []
    for comp in law.detected():
        kind, k = comp.component[0], int(comp.component[1:]) - 1
        if kind == "M":
            left, right = factors.W_M[:, k], None
        elif kind == "N":
            left, right = None, factors.W_N[:, k]
        else:
            left = skewed_direction(factors.P, factors.R, kernel, k, "left", ratios)
            right = skewed_direction(factors.P, factors.R, kernel, k, "right", ratios)
        targets.append(_Target(comp.component, comp.xi, comp.zeta_left, comp.zeta_right, left, right))

    probes_right = {f"v_N{k + 1}": factors.W_N[:, k] for k in range(s.r_N)}
    probes_right.update({f"w_R{k + 1}": factors.W_R[:, k] for k in range(s.r)})
    probes_left = {f"u_M{k + 1}": factors.W_M[:, k] for k in range(s.r_M)}
    probes_left.update({f"w_P{k + 1}": factors.W_P[:, k] for k in range(s.r)})
    # A right-side probe orthogonal to every signal direction of the right view.
    g = rng_stream(spec.seed, "probe").standard_normal(spec.dims.q)
    basis = np.hstack([factors.W_N, factors.W_R])
    if basis.shape[1]:
        g = g - basis @ np.linalg.lstsq(basis, g, rcond=None)[0]
    probes_right["orthogonal"] = g / np.linalg.norm(g)
    spurious = rng_stream(spec.seed, "probe", 1).standard_normal(spec.dims.p)
    spurious /= np.linalg.norm(spurious)

    z = bulk.x_plus + config.resolvent_offset
    m = complex("nan")
    bilinear = {}
    if "resolvent" in config.quantities:
        m = stieltjes_m(z, ratios).m
        for side, probes in (("right", probes_right), ("left", probes_left)):
            if probes:
                forms = det_equiv_quadratic_forms(factors, z, list(probes.values()), side)
                bilinear.update({(side, name): float(f) for name, f in zip(probes, forms)})
    return _Theory(ratios, bulk, law, targets, probes_right, probes_left, z, m, bilinear, spurious)


# ---------------------------------------------------------------------------
# One trial
# ---------------------------------------------------------------------------


@dataclass
class TrialResult:
    trial: int
    values_top: np.ndarray
    n_extracted: int
    mismatch: bool
    confined: bool
    ks: float | None = None
    spikes: dict = field(default_factory=dict)  # component -> empirical value
    alignments: dict = field(default_factory=dict)  # (component, side) -> squared inner product
    vectors: dict = field(default_factory=dict)  # component -> (u_hat, v_hat), jointly sign-fixed
    spurious: float | None = None
    trace: complex | None = None
    bilinear: dict = field(default_factory=dict)
    bilinear_theory: dict = field(default_factory=dict)
    pca: dict = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "trial": self.trial,
            "largest": float(self.values_top[0]) if self.values_top.size else 0.0,
            "n_extracted": self.n_extracted,
            "mismatch": self.mismatch,
            "ks": self.ks,
            **{f"spike_{c}": v for c, v in self.spikes.items()},
            **{f"align_{c}_{side}": v for (c, side), v in self.alignments.items()},
            "spurious_sq": self.spurious,
            "trace": None if self.trace is None else self.trace.real,
        }


def _ks_nonzero(values: np.ndarray, bulk: BulkLaw) -> float:
    top = values.max() if values.size else 0.0
    nonzero = values[values > 1e-9 * max(top, 1.0)]
    scale = 1.0 - bulk.atom0
    result = stats.kstest(nonzero, lambda x: (bulk.cdf(x) - bulk.atom0) / scale)
    return float(result.statistic)


def _pca_applies(config: ExperimentConfig) -> bool:
    # Per-view PCA targets the common loadings only when no specific component competes.
    s = config.model.spectrum
    return "pca" in config.quantities and s.r > 0 and s.r_M == 0 and s.r_N == 0


def _run_trial(config: ExperimentConfig, spec: ModelSpec, factors, theory: _Theory, t: int,
               noise_index: int) -> TrialResult:
    pair: DataPair = sample_pair(spec, noise_index, factors)
    U, values, V = full_svd(cross_covariance(pair))
    extracted = extract_spikes(values, theory.bulk.x_plus, config.spike_margin)
    res = TrialResult(
        trial=t,
        values_top=values[: max(8, len(theory.targets) + 2)].copy(),
        n_extracted=len(extracted),
        mismatch=len(extracted) != len(theory.targets),
        confined=bool(values.size == 0 or values[0] <= theory.bulk.x_plus * (1 + config.spike_margin)),
    )
    q = spec.dims.q
    if "density" in config.quantities:
        res.ks = _ks_nonzero(values, theory.bulk)
    for rank, target in enumerate(theory.targets):
        if rank >= values.size:
            break
        u_hat, v_hat = U[:, rank], V[:, rank]
        if "spikes" in config.quantities:
            res.spikes[target.component] = float(values[rank])
        if "alignments" in config.quantities:
            if target.left is not None:
                res.alignments[(target.component, "left")] = alignment_measure(u_hat, target.left)
            if target.right is not None:
                res.alignments[(target.component, "right")] = alignment_measure(v_hat, target.right)
        if "mean_directions" in config.quantities:
            # Flip the pair jointly so the side that has a target points toward it.
            ref_side = target.right if target.right is not None else target.left
            own = v_hat if target.right is not None else u_hat
            sign = 1.0 if own @ ref_side >= 0 else -1.0
            res.vectors[target.component] = (sign * u_hat, sign * v_hat)
            if target.component.startswith("N"):
                res.spurious = float((u_hat @ theory.spurious_probe) ** 2)
    if "resolvent" in config.quantities:
        res.bilinear_theory = dict(theory.bilinear)
        res.trace = resolvent_trace(values, q, theory.z)
        for name, v in theory.probes_right.items():
            res.bilinear[("right", name)] = resolvent_bilinear(values, V, theory.z, v, v).real
        for name, v in theory.probes_left.items():
            res.bilinear[("left", name)] = resolvent_bilinear(values, U, theory.z, v, v).real
    if _pca_applies(config):
        k = spec.spectrum.r
        pca = pca_top(pair, k)
        for j in range(k):
            res.pca[("P", j)] = alignment_measure(pca.vectors_X[:, j], factors.W_P[:, j])
            res.pca[("R", j)] = alignment_measure(pca.vectors_Y[:, j], factors.W_R[:, j])
    return res


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------


def _mean_se(values) -> tuple[float, float]:
    arr = np.asarray(list(values), dtype=float)
    mean = float(arr.mean())
    se = float(arr.std(ddof=1) / math.sqrt(arr.size)) if arr.size > 1 else float("nan")
    return mean, se


@dataclass
class AggregateReport:
    config: dict
    digest: str
    seed: int
    trials: int
    ratios: dict
    x_minus: float
    x_plus: float
    tau: float
    density: dict
    spike_table: list
    alignment_table: list
    direction_table: list
    resolvent_table: list
    pca_table: list
    mismatch_rate: float
    trial_summaries: list
    trial_seeds: list = field(default_factory=list)
    mean_vectors: dict = field(default_factory=dict, repr=False)

    def to_dict(self, include_vectors: bool = False) -> dict:
        out = {
            "config": self.config,
            "config_hash": self.digest,
            "seed": self.seed,
            "trials": self.trials,
            "trial_seeds": self.trial_seeds,
            "ratios": self.ratios,
            "x_minus": self.x_minus,
            "x_plus": self.x_plus,
            "tau": self.tau,
            "density": self.density,
            "spike_table": self.spike_table,
            "alignment_table": self.alignment_table,
            "direction_table": self.direction_table,
            "resolvent_table": self.resolvent_table,
            "pca_table": self.pca_table,
            "mismatch_rate": self.mismatch_rate,
            "trial_summaries": self.trial_summaries,
        }
        if include_vectors:
            out["mean_vectors"] = {k: {"left": u, "right": v} for k, (u, v) in self.mean_vectors.items()}
        return out

    def file_stem(self) -> str:
        return f"{self.digest}_s{self.seed}"

    def write(self, out_dir) -> list[Path]:
        """JSON summary plus one CSV per table; names embed the config hash and seed."""
        out = Path(out_dir)
        stem = self.file_stem()
        paths = [io.write_json(out / f"report_{stem}.json", self.to_dict())]
        tables = {
            "spikes": (self.spike_table, SPIKE_COLUMNS),
            "alignments": (self.alignment_table, ALIGNMENT_COLUMNS),
            "directions": (self.direction_table, DIRECTION_COLUMNS),
            "resolvent": (self.resolvent_table, RESOLVENT_COLUMNS),
            "pca": (self.pca_table, PCA_COLUMNS),
        }
        for name, (rows, cols) in tables.items():
            paths.append(io.write_csv(out / f"{name}_{stem}.csv", rows, cols))
        paths.append(io.write_csv(out / f"trials_{stem}.csv", self.trial_summaries))
        return paths


SPIKE_COLUMNS = ["component", "lambda", "predicted_xi", "empirical_mean", "standard_error", "relative_error"]
ALIGNMENT_COLUMNS = ["component", "side", "predicted_zeta", "empirical_mean", "standard_error", "deviation"]
DIRECTION_COLUMNS = ["component", "side", "mean_norm", "cos2_with_target"]
RESOLVENT_COLUMNS = ["quantity", "side", "probe", "z", "theory", "empirical_mean", "standard_error", "deviation"]
PCA_COLUMNS = ["view", "index", "lambda", "predicted_zeta", "empirical_mean", "standard_error", "deviation"]


def _aggregate(config: ExperimentConfig, theory: _Theory, results: list[TrialResult]) -> AggregateReport:
    spec = config.model
    trials = len(results)
    lams = {c.component: c.lam for c in theory.law.components}

    density = {"confined_fraction": float(np.mean([r.confined for r in results]))}
    if "density" in config.quantities:
        ks = [r.ks for r in results]
        density.update({"ks_mean": float(np.mean(ks)), "ks_max": float(np.max(ks)), "ks": ks})

    spike_table = []
    alignment_table = []
    direction_table = []
    mean_vectors = {}
    for target in theory.targets:
        c = target.component
        if "spikes" in config.quantities:
            mean, se = _mean_se(r.spikes[c] for r in results if c in r.spikes)
            spike_table.append({
                "component": c, "lambda": lams[c], "predicted_xi": target.xi,
                "empirical_mean": mean, "standard_error": se,
                "relative_error": (mean - target.xi) / target.xi,
            })
        if "alignments" in config.quantities:
            for side, zeta in (("left", target.zeta_left), ("right", target.zeta_right)):
                vals = [r.alignments[(c, side)] for r in results if (c, side) in r.alignments]
                if not vals:
                    continue
                mean, se = _mean_se(vals)
                alignment_table.append({
                    "component": c, "side": side, "predicted_zeta": zeta,
                    "empirical_mean": mean, "standard_error": se, "deviation": mean - zeta,
                })
        if "mean_directions" in config.quantities:
            pairs = [r.vectors[c] for r in results if c in r.vectors]
            if pairs:
                u_mean = np.mean([u for u, _ in pairs], axis=0)
                v_mean = np.mean([v for _, v in pairs], axis=0)
                mean_vectors[c] = (u_mean, v_mean)
                for side, vec, ref in (("left", u_mean, target.left), ("right", v_mean, target.right)):
                    norm = float(np.linalg.norm(vec))
                    cos2 = float((vec @ ref) ** 2 / norm**2) if ref is not None and norm > 0 else None
                    direction_table.append({"component": c, "side": side, "mean_norm": norm, "cos2_with_target": cos2})
    spurious = [r.spurious for r in results if r.spurious is not None]
    if spurious:
        p = spec.dims.p
        density["spurious_probe_fraction_below_25_over_p"] = float(np.mean(np.asarray(spurious) < 25 / p))

    resolvent_table = []
    if "resolvent" in config.quantities:
        mean, se = _mean_se(r.trace.real for r in results)
        resolvent_table.append({
            "quantity": "trace", "side": "right", "probe": "", "z": theory.z, "theory": theory.m.real,
            "empirical_mean": mean, "standard_error": se, "deviation": mean - theory.m.real,
        })
        for key in theory.bilinear:
            side, name = key
            # Signal resampling changes the probes; compare trial-matched pairs.
            value = float(np.mean([r.bilinear_theory[key] for r in results]))
            mean, se = _mean_se(r.bilinear[key] for r in results)
            resolvent_table.append({
                "quantity": "bilinear", "side": side, "probe": name, "z": theory.z, "theory": value,
                "empirical_mean": mean, "standard_error": se, "deviation": mean - value,
            })

    pca_table = []
    if _pca_applies(config):
        s = spec.spectrum
        for j in range(s.r):
            for view, lam, beta in (("P", s.lambdas_P[j], spec.dims.beta_p), ("R", s.lambdas_R[j], spec.dims.beta_q)):
                mean, se = _mean_se(r.pca[(view, j)] for r in results)
                zeta = pca_alignment(lam, beta) if lam > 0 else 0.0
                pca_table.append({
                    "view": view, "index": j + 1, "lambda": lam, "predicted_zeta": zeta,
                    "empirical_mean": mean, "standard_error": se, "deviation": mean - zeta,
                })

    return AggregateReport(
        config=config.to_dict(),
        digest=config.digest(),
        seed=spec.seed,
        trials=trials,
        ratios=theory.ratios.to_dict(),
        x_minus=theory.bulk.x_minus,
        x_plus=theory.bulk.x_plus,
        tau=theory.law.tau,
        density=density,
        spike_table=spike_table,
        alignment_table=alignment_table,
        direction_table=direction_table,
        resolvent_table=resolvent_table,
        pca_table=pca_table,
        mismatch_rate=float(np.mean([r.mismatch for r in results])),
        trial_summaries=[r.summary() for r in results],
        trial_seeds=[spec.seed if config.signal == "fixed" else _trial_seed(spec.seed, r.trial) for r in results],
        mean_vectors=mean_vectors,
    )


def _trial_seed(seed: int, t: int) -> int:
    return seed ^ t


def run_experiment(config: ExperimentConfig, threads: int | None = None) -> AggregateReport:
    """Run all trials on a thread pool and reduce them in trial-index order.

    With ``signal="resample"`` trial ``t`` regenerates the whole model from
    seed ``seed XOR t``. With ``signal="fixed"`` every trial shares the signal
    of the base seed and draws its noise from the streams keyed by
    ``(seed, t)``. Either way results do not depend on scheduling.
    """
    base = config.model
    fixed_factors = build_signal_factors(base, config.bases)
    fixed_theory = _prepare(config, fixed_factors)

    def one(t: int) -> TrialResult:
        if config.signal == "fixed":
            return _run_trial(config, base, fixed_factors, fixed_theory, t, t)
        spec = base.with_seed(_trial_seed(base.seed, t))
        factors = build_signal_factors(spec, config.bases)
        return _run_trial(config, spec, factors, _prepare(config, factors, spec), t, 0)

    workers = threads or os.cpu_count() or 1
    if workers == 1:
        results = [one(t) for t in range(config.trials)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(config.trials)))
    return _aggregate(config, fixed_theory, results)


# ---------------------------------------------------------------------------
# PLS versus PCA on a grid of signal strengths
# ---------------------------------------------------------------------------


@dataclass
class GridTable:
    ratios: AspectRatios
    lambdas_P: np.ndarray
    lambdas_R: np.ndarray
    pls: np.ndarray  # [i, j] for (lambdas_P[i], lambdas_R[j])
    pca: np.ndarray
    lambda_T: np.ndarray
    tau: float

    @property
    def difference(self) -> np.ndarray:
        return self.pls - self.pca

    @property
    def pca_detects(self) -> np.ndarray:
        return (self.lambdas_P[:, None] > math.sqrt(self.ratios.beta_p)) & (
            self.lambdas_R[None, :] > math.sqrt(self.ratios.beta_q)
        )

    @property
    def pls_detects(self) -> np.ndarray:
        return self.lambda_T > self.tau

    def pls_contour(self) -> list[tuple[float, float]]:
        """Curve ``lambda_P + lambda_R + lambda_P lambda_R = tau`` as ``(lambda_P, lambda_R)`` points."""
        lp = np.linspace(0.0, self.tau, 200)
        return [(float(a), float((self.tau - a) / (1 + a))) for a in lp]

    def pca_thresholds(self) -> tuple[float, float]:
        return math.sqrt(self.ratios.beta_p), math.sqrt(self.ratios.beta_q)

    def rows(self) -> list[dict]:
        out = []
        for i, lp in enumerate(self.lambdas_P):
            for j, lr in enumerate(self.lambdas_R):
                out.append({
                    "lambda_P": float(lp), "lambda_R": float(lr), "lambda_T": float(self.lambda_T[i, j]),
                    "pls_product": float(self.pls[i, j]), "pca_product": float(self.pca[i, j]),
                    "difference": float(self.pls[i, j] - self.pca[i, j]),
                })
        return out


GRID_COLUMNS = ["lambda_P", "lambda_R", "lambda_T", "pls_product", "pca_product", "difference"]


def pls_vs_pca_grid(ratios: AspectRatios, lambdas_P, lambdas_R=None) -> GridTable:
    """Alignment products ``zeta_P zeta_R`` of rank-one PLS and of per-view PCA."""
    lambdas_P = np.asarray(lambdas_P, dtype=float)
    lambdas_R = lambdas_P if lambdas_R is None else np.asarray(lambdas_R, dtype=float)
    shape = (lambdas_P.size, lambdas_R.size)
    pls, pca, lam_t = np.zeros(shape), np.zeros(shape), np.zeros(shape)
    for i, lp in enumerate(lambdas_P):
        for j, lr in enumerate(lambdas_R):
            lam_t[i, j] = lp + lr + lp * lr
            zp, zr = align_common_diagonal(lp, lr, ratios)
            pls[i, j] = zp * zr
            a = pca_alignment(lp, ratios.beta_p) if lp > 0 else 0.0
            b = pca_alignment(lr, ratios.beta_q) if lr > 0 else 0.0
            pca[i, j] = a * b
    return GridTable(ratios, lambdas_P, lambdas_R, pls, pca, lam_t, threshold_tau(ratios))
