"""Empirical side: cross-covariance, its singular spectrum, spikes, alignments and PCA."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class SpectrumError(RuntimeError):
    """The SVD of a cross-covariance failed to converge."""


def _fix_signs(U: np.ndarray, V: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # Largest-magnitude entry of each left vector made positive; pairs flip together.
    if U.size == 0:
        return U, V
    pivots = np.argmax(np.abs(U), axis=0)
    signs = np.sign(U[pivots, np.arange(U.shape[1])])
    signs[signs == 0] = 1.0
    return U * signs, V * signs


@dataclass(frozen=True, eq=False)
class CrossCovariance:
    matrix: np.ndarray  # p x q

    @property
    def shape(self) -> tuple[int, int]:
        return self.matrix.shape

    def kernel(self) -> np.ndarray:
        """``K = S^T S`` (q x q)."""
        return self.matrix.T @ self.matrix

    def kernel_tilde(self) -> np.ndarray:
        """``K_tilde = S S^T`` (p x p)."""
        return self.matrix @ self.matrix.T


def cross_covariance(X, Y=None) -> CrossCovariance:
    """``S = X^T Y / sqrt(p q)`` from a data pair or from two matrices."""
    if Y is None:
        X, Y = X.X, X.Y
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.ndim != 2 or Y.ndim != 2 or X.shape[0] != Y.shape[0]:
        raise ValueError(f"X {X.shape} and Y {Y.shape} must be matrices with equal row counts")
    p, q = X.shape[1], Y.shape[1]
    S = X.T @ Y / math.sqrt(p * q)
    if not np.all(np.isfinite(S)):
        raise ValueError("cross-covariance has non-finite entries")
    return CrossCovariance(S)


def default_histogram_range(values: np.ndarray, x_minus: float | None, x_plus: float | None):
    lo = 0.9 * x_minus if x_minus else 0.0
    top = float(values.max()) if values.size else 0.0
    hi = 1.1 * max(x_plus or 0.0, top)
    return lo, hi if hi > lo else lo + 1.0


@dataclass(frozen=True, eq=False)
class SpectrumReport:
    squared_singular_values: np.ndarray  # length d, non-increasing
    left_vectors: np.ndarray  # p x top_k
    right_vectors: np.ndarray  # q x top_k
    bin_edges: np.ndarray
    counts: np.ndarray

    @property
    def histogram(self) -> tuple[np.ndarray, np.ndarray]:
        return self.bin_edges, self.counts

    def csv_rows(self) -> list[dict]:
        return [{"index": i, "squared_singular_value": float(v)} for i, v in enumerate(self.squared_singular_values)]

    def to_dict(self) -> dict:
        return {
            "squared_singular_values": self.squared_singular_values.tolist(),
            "histogram": {"bin_edges": self.bin_edges.tolist(), "counts": self.counts.tolist()},
            "left_vectors": self.left_vectors.T.tolist(),
            "right_vectors": self.right_vectors.T.tolist(),
        }


def _svd(S: np.ndarray, vectors: bool):
    try:
        if vectors:
            return np.linalg.svd(S, full_matrices=False)
        return np.linalg.svd(S, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise SpectrumError(f"SVD did not converge for a {S.shape[0]}x{S.shape[1]} cross-covariance") from exc


def squared_singular_spectrum(S, top_k: int = 0, bins: int = 100, x_minus: float | None = None,
                              x_plus: float | None = None) -> SpectrumReport:
    """Full squared singular spectrum, the top-k singular pairs and a histogram."""
    mat = S.matrix if isinstance(S, CrossCovariance) else np.asarray(S, dtype=float)
    d = min(mat.shape)
    if not 0 <= top_k <= d:
        raise ValueError(f"top_k={top_k} must lie in [0, {d}]")
    if top_k:
        U, s, Vt = _svd(mat, True)
        U, V = _fix_signs(U[:, :top_k], Vt[:top_k].T)
    else:
        s = _svd(mat, False)
        U, V = np.zeros((mat.shape[0], 0)), np.zeros((mat.shape[1], 0))
    values = s**2
    lo, hi = default_histogram_range(values, x_minus, x_plus)
    counts, edges = np.histogram(values, bins=bins, range=(lo, hi))
    return SpectrumReport(values, U, V, edges, counts)


def full_svd(S) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Thin SVD ``(U, s^2, V)`` with the sign convention used throughout."""
    mat = S.matrix if isinstance(S, CrossCovariance) else np.asarray(S, dtype=float)
    U, s, Vt = _svd(mat, True)
    U, V = _fix_signs(U, Vt.T)
    return U, s**2, V


def extract_spikes(report, edge_hi: float, margin: float = 0.05) -> list[tuple[int, float]]:
    """All squared singular values above ``edge_hi (1 + margin)``, descending."""
    if margin < 0:
        raise ValueError("margin must be nonnegative")
    values = report.squared_singular_values if isinstance(report, SpectrumReport) else np.asarray(report)
    cut = edge_hi * (1 + margin)
    out = []
    for i, v in enumerate(values):
        if v <= cut:
            break
        out.append((i, float(v)))
    return out


def _unit(name: str, v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    norm = np.linalg.norm(v)
    if norm == 0:
        raise ValueError(f"{name} has zero norm")
    if abs(norm - 1) > 1e-8:
        raise ValueError(f"{name} must be unit norm, got norm {norm}")
    return v


def alignment_measure(v_hat, v_ref) -> float:
    """Squared inner product of two unit vectors, clipped to [0, 1]."""
    a = _unit("v_hat", v_hat)
    b = _unit("v_ref", v_ref)
    return float(np.clip(np.dot(a, b) ** 2, 0.0, 1.0))


def mean_direction(vectors, reference) -> tuple[np.ndarray, float]:
    """Average after flipping each vector onto the reference half-space; not renormalized."""
    vecs = np.asarray(vectors, dtype=float)
    if vecs.size == 0:
        raise ValueError("mean_direction needs at least one vector")
    vecs = np.atleast_2d(vecs)
    ref = np.asarray(reference, dtype=float)
    signs = np.where(vecs @ ref >= 0, 1.0, -1.0)
    mean = (vecs * signs[:, None]).mean(axis=0)
    return mean, float(np.linalg.norm(mean))


@dataclass(frozen=True, eq=False)
class PCAResult:
    values_X: np.ndarray  # top eigenvalues of S_XX
    vectors_X: np.ndarray  # p x k
    values_Y: np.ndarray
    vectors_Y: np.ndarray  # q x k


def _top_eig_cov(Z: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    # Eigenpairs of Z^T Z / cols from the right singular pairs of Z.
    cols = Z.shape[1]
    if k == 0:
        return np.zeros(0), np.zeros((cols, 0))
    _, s, Vt = _svd(Z, True)
    V = Vt[:k].T
    pivots = np.argmax(np.abs(V), axis=0)
    V = V * np.sign(V[pivots, np.arange(k)])
    return s[:k] ** 2 / cols, V


def pca_top(pair, k: int) -> PCAResult:
    """Top-k eigenpairs of ``S_XX = X^T X / p`` and ``S_YY = Y^T Y / q``."""
    X, Y = np.asarray(pair.X), np.asarray(pair.Y)
    if not 0 <= k <= min(X.shape[1], Y.shape[1]):
        raise ValueError(f"k={k} must lie in [0, min(p, q)]")
    vx, Vx = _top_eig_cov(X, k)
    vy, Vy = _top_eig_cov(Y, k)
    return PCAResult(vx, Vx, vy, Vy)


def resolvent_trace(values: np.ndarray, size: int, z: complex) -> complex:
    """``(1/size) Tr (K - z I)^{-1}`` from the nonzero part of the spectrum of ``K``."""
    values = np.asarray(values, dtype=float)
    zeros = size - values.size
    return complex((np.sum(1.0 / (values - z)) + zeros * (-1.0 / z)) / size)


def resolvent_bilinear(values, vectors, z: complex, a, b) -> complex:
    """``a^T (K - z I)^{-1} b`` for ``K = V diag(values) V^T`` padded by zeros off span(V)."""
    V = np.asarray(vectors, dtype=float)
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    ca, cb = V.T @ a, V.T @ b
    inside = np.sum(ca * cb / (np.asarray(values) - z))
    outside = (a @ b - ca @ cb) * (-1.0 / z)
    return complex(inside + outside)
