"""Synthetic signal-plus-noise pairs ``X = T P^T + M + E`` and ``Y = T R^T + N + F``.

A single orthonormal frame in sample space yields the scores ``T`` and the
specific score directions of ``M`` and ``N``, so every orthogonality constraint
between them holds to machine precision. Loadings are spectral factorizations
with prescribed kernel eigenvalues.

Randomness comes from Philox streams keyed by ``(seed, stream id)``. Signal
streams ignore the trial index so that repeated trials share one signal and
differ only in their noise.
"""

from __future__ import annotations

import hashlib
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import NamedTuple

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

import tomli_w

# Stream identifiers mixed into the generator key.
_STREAM_IDS = {"frame": 1, "W_P": 2, "W_R": 3, "W_M": 4, "W_N": 5, "E": 6, "F": 7, "probe": 8}
_U64 = 2**64


def rng_stream(seed: int, name: str, trial: int = 0) -> np.random.Generator:
    """Independent counter-based generator for one matrix of one trial."""
    if not 0 <= seed < _U64:
        raise ValueError(f"seed must fit in 64 unsigned bits, got {seed}")
    if not 0 <= trial < 2**32:
        raise ValueError(f"trial index out of range: {trial}")
    key = np.array([seed, (_STREAM_IDS[name] << 32) | trial], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class Dimensions:
    n: int
    p: int
    q: int

    def __post_init__(self):
        for name in ("n", "p", "q"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ValueError(f"{name} must be a positive integer, got {value!r}")
            object.__setattr__(self, name, int(value))

    @property
    def d(self) -> int:
        return min(self.p, self.q)

    @property
    def beta_p(self) -> float:
        return self.n / self.p

    @property
    def beta_q(self) -> float:
        return self.n / self.q

    @property
    def beta(self) -> float:
        return max(self.beta_p, self.beta_q)

    def ratios(self):
        from .rmt_theory import AspectRatios

        return AspectRatios(self.beta_p, self.beta_q)


def _as_rotation(name: str, value, r: int) -> np.ndarray:
    if value is None:
        return np.eye(r)
    mat = np.asarray(value, dtype=float)
    if mat.size != r * r:
        raise ValueError(f"{name} must hold {r * r} entries, got {mat.size}")
    mat = mat.reshape(r, r)
    if r and np.abs(mat.T @ mat - np.eye(r)).max() > 1e-10:
        raise ValueError(f"{name} is not orthogonal to 1e-10")
    return mat


def _as_spectrum(name: str, values, positive: bool) -> tuple[float, ...]:
    vals = tuple(float(v) for v in values)
    for v in vals:
        if not math.isfinite(v) or v < 0 or (positive and v == 0):
            kind = "positive" if positive else "nonnegative"
            raise ValueError(f"{name} entries must be finite and {kind}, got {v}")
    if any(a < b for a, b in zip(vals, vals[1:])):
        raise ValueError(f"{name} must be sorted non-increasing, got {list(vals)}")
    return vals


def rotation_2d(degrees: float) -> np.ndarray:
    t = math.radians(degrees)
    return np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])


@dataclass(frozen=True)
class SignalSpectrum:
    lambdas_P: tuple = ()
    lambdas_R: tuple = ()
    lambdas_M: tuple = ()
    lambdas_N: tuple = ()
    rotation_P: np.ndarray | None = None
    rotation_R: np.ndarray | None = None

    def __post_init__(self):
        object.__setattr__(self, "lambdas_P", _as_spectrum("lambdas_P", self.lambdas_P, False))
        object.__setattr__(self, "lambdas_R", _as_spectrum("lambdas_R", self.lambdas_R, False))
        object.__setattr__(self, "lambdas_M", _as_spectrum("lambdas_M", self.lambdas_M, True))
        object.__setattr__(self, "lambdas_N", _as_spectrum("lambdas_N", self.lambdas_N, True))
        if len(self.lambdas_P) != len(self.lambdas_R):
            raise ValueError("lambdas_P and lambdas_R must have the common rank r as length")
        r = self.r
        for name in ("rotation_P", "rotation_R"):
            rot = _as_rotation(name, getattr(self, name), r)
            rot.setflags(write=False)
            object.__setattr__(self, name, rot)

    @property
    def r(self) -> int:
        return len(self.lambdas_P)

    @property
    def r_M(self) -> int:
        return len(self.lambdas_M)

    @property
    def r_N(self) -> int:
        return len(self.lambdas_N)

    @property
    def K_P(self) -> np.ndarray:
        return self.rotation_P @ np.diag(self.lambdas_P) @ self.rotation_P.T

    @property
    def K_R(self) -> np.ndarray:
        return self.rotation_R @ np.diag(self.lambdas_R) @ self.rotation_R.T

    def __eq__(self, other):
        if not isinstance(other, SignalSpectrum):
            return NotImplemented
        return (
            self.lambdas_P == other.lambdas_P
            and self.lambdas_R == other.lambdas_R
            and self.lambdas_M == other.lambdas_M
            and self.lambdas_N == other.lambdas_N
            and np.array_equal(self.rotation_P, other.rotation_P)
            and np.array_equal(self.rotation_R, other.rotation_R)
        )

    __hash__ = None


@dataclass(frozen=True, eq=True)
class ModelSpec:
    dims: Dimensions
    spectrum: SignalSpectrum = field(default_factory=SignalSpectrum)
    seed: int = 0

    def __post_init__(self):
        if not 0 <= int(self.seed) < _U64 or int(self.seed) != self.seed:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        object.__setattr__(self, "seed", int(self.seed))
        s, d = self.spectrum, self.dims
        if s.r + s.r_M + s.r_N > d.n:
            raise ValueError(f"total rank r + r_M + r_N = {s.r + s.r_M + s.r_N} exceeds n = {d.n}")
        if s.r > min(d.p, d.q):
            raise ValueError(f"common rank r = {s.r} exceeds min(p, q) = {d.d}")
        if s.r_M > d.p or s.r_N > d.q:
            raise ValueError("specific rank exceeds the variable count of its view")

    # -- serialization -----------------------------------------------------
    def to_dict(self) -> dict:
        s = self.spectrum
        return {
            "n": self.dims.n,
            "p": self.dims.p,
            "q": self.dims.q,
            "r": s.r,
            "r_M": s.r_M,
            "r_N": s.r_N,
            "lambdas_P": list(s.lambdas_P),
            "lambdas_R": list(s.lambdas_R),
            "lambdas_M": list(s.lambdas_M),
            "lambdas_N": list(s.lambdas_N),
            "rotation_P": s.rotation_P.ravel().tolist(),
            "rotation_R": s.rotation_R.ravel().tolist(),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ModelSpec":
        known = {"n", "p", "q", "r", "r_M", "r_N", "lambdas_P", "lambdas_R", "lambdas_M",
                 "lambdas_N", "rotation_P", "rotation_R", "seed"}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown model keys: {sorted(unknown)}")
        spectrum = SignalSpectrum(
            lambdas_P=data.get("lambdas_P", ()),
            lambdas_R=data.get("lambdas_R", ()),
            lambdas_M=data.get("lambdas_M", ()),
            lambdas_N=data.get("lambdas_N", ()),
            rotation_P=data.get("rotation_P"),
            rotation_R=data.get("rotation_R"),
        )
        for key, actual in (("r", spectrum.r), ("r_M", spectrum.r_M), ("r_N", spectrum.r_N)):
            if key in data and int(data[key]) != actual:
                raise ValueError(f"{key}={data[key]} disagrees with the spectrum length {actual}")
        return cls(Dimensions(data["n"], data["p"], data["q"]), spectrum, int(data.get("seed", 0)))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_toml(self) -> str:
        return tomli_w.dumps(self.to_dict())

    @classmethod
    def load(cls, path) -> "ModelSpec":
        path = Path(path)
        text = path.read_text()
        if path.suffix.lower() == ".toml":
            return cls.from_dict(tomllib.loads(text))
        return cls.from_dict(json.loads(text))

    def save(self, path) -> None:
        path = Path(path)
        path.write_text(self.to_toml() if path.suffix.lower() == ".toml" else self.to_json())

    def digest(self) -> str:
        """Short stable hash of the canonical JSON form."""
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:12]

    def with_seed(self, seed: int) -> "ModelSpec":
        return ModelSpec(self.dims, self.spectrum, seed)


class SignalFactors(NamedTuple):
    T: np.ndarray
    P: np.ndarray
    R: np.ndarray
    M: np.ndarray
    N: np.ndarray
    W_P: np.ndarray  # p x r, left singular vectors of P
    W_R: np.ndarray  # q x r, left singular vectors of R
    W_M: np.ndarray  # p x r_M, directions u_{M,k}
    W_N: np.ndarray  # q x r_N, directions v_{N,k}


def _orthonormal(g: np.ndarray) -> np.ndarray:
    if g.shape[1] == 0:
        return g
    Q, Rm = np.linalg.qr(g)
    return Q * np.sign(np.diag(Rm))


def _basis(spec: ModelSpec, name: str, rows: int, cols: int, bases: dict | None) -> np.ndarray:
    if bases and name in bases:
        W = np.asarray(bases[name], dtype=float)
        if W.shape != (rows, cols) or np.abs(W.T @ W - np.eye(cols)).max() > 1e-10:
            raise ValueError(f"basis {name} must be a {rows}x{cols} matrix with orthonormal columns")
        return W
    return _orthonormal(rng_stream(spec.seed, name).standard_normal((rows, cols)))


def build_signal_factors(spec: ModelSpec, bases: dict | None = None) -> SignalFactors:
    """Deterministic signal part of the model.

    ``bases`` optionally overrides any of the variable-space frames ``W_P``,
    ``W_R``, ``W_M``, ``W_N`` with given orthonormal-column matrices.
    """
    d, s = spec.dims, spec.spectrum
    n, p, q = d.n, d.p, d.q
    frame = _orthonormal(rng_stream(spec.seed, "frame").standard_normal((n, s.r + s.r_M + s.r_N)))
    T = frame[:, : s.r]
    Mbar = frame[:, s.r : s.r + s.r_M]
    Nbar = frame[:, s.r + s.r_M :]
    W_P = _basis(spec, "W_P", p, s.r, bases)
    W_R = _basis(spec, "W_R", q, s.r, bases)
    W_M = _basis(spec, "W_M", p, s.r_M, bases)
    W_N = _basis(spec, "W_N", q, s.r_N, bases)
    P = math.sqrt(p) * (W_P * np.sqrt(s.lambdas_P)) @ s.rotation_P.T
    R = math.sqrt(q) * (W_R * np.sqrt(s.lambdas_R)) @ s.rotation_R.T
    M = Mbar @ (math.sqrt(p) * W_M * np.sqrt(s.lambdas_M)).T
    N = Nbar @ (math.sqrt(q) * W_N * np.sqrt(s.lambdas_N)).T
    out = SignalFactors(T, P, R, M, N, W_P, W_R, W_M, W_N)
    for arr in out:
        arr.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class DataPair:
    """One realized sample with its ground truth; arrays are read-only."""

    X: np.ndarray
    Y: np.ndarray
    factors: SignalFactors
    spec: ModelSpec
    trial: int = 0

    T = property(lambda self: self.factors.T)
    P = property(lambda self: self.factors.P)
    R = property(lambda self: self.factors.R)
    M = property(lambda self: self.factors.M)
    N = property(lambda self: self.factors.N)

    @property
    def dims(self) -> Dimensions:
        return self.spec.dims


def sample_noise(spec: ModelSpec, trial: int = 0) -> tuple[np.ndarray, np.ndarray]:
    d = spec.dims
    E = rng_stream(spec.seed, "E", trial).standard_normal((d.n, d.p))
    F = rng_stream(spec.seed, "F", trial).standard_normal((d.n, d.q))
    return E, F


def sample_pair(spec: ModelSpec, trial: int = 0, factors: SignalFactors | None = None) -> DataPair:
    """Draw ``(X, Y)``; ``trial`` selects independent noise on top of the same signal."""
    if factors is None:
        factors = build_signal_factors(spec)
    E, F = sample_noise(spec, trial)
    X = E
    Y = F
    if factors.T.shape[1]:
        X = X + factors.T @ factors.P.T
        Y = Y + factors.T @ factors.R.T
    if factors.M.any():
        X = X + factors.M
    if factors.N.any():
        Y = Y + factors.N
    X.setflags(write=False)
    Y.setflags(write=False)
    return DataPair(X=X, Y=Y, factors=factors, spec=spec, trial=trial)
