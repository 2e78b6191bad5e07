"""Spikes shared by both views: common kernel, alignments and skewed directions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ratios import AspectRatios
from .spikes import threshold_polynomial, threshold_tau


def _check_psd(name: str, K: np.ndarray) -> np.ndarray:
    K = np.atleast_2d(np.asarray(K, dtype=float))
    if K.ndim != 2 or K.shape[0] != K.shape[1]:
        raise ValueError(f"{name} must be square, got shape {K.shape}")
    scale = max(1.0, float(np.abs(K).max(initial=0.0)))
    if not np.allclose(K, K.T, atol=1e-10 * scale, rtol=0):
        raise ValueError(f"{name} is not symmetric")
    K = (K + K.T) / 2
    if K.size and np.linalg.eigvalsh(K).min() < -1e-10 * scale:
        raise ValueError(f"{name} is not positive semidefinite")
    return K


def _sym_power(K: np.ndarray, power: float) -> np.ndarray:
    w, V = np.linalg.eigh(K)
    w = np.clip(w, 0.0, None)
    if power < 0 and np.any(w <= 0):
        raise np.linalg.LinAlgError("matrix is singular")
    return (V * w**power) @ V.T


def _eigh_desc(K: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    w, V = np.linalg.eigh(K)
    w, V = w[::-1], V[:, ::-1]
    # Deterministic sign: largest-magnitude entry of each vector positive.
    if V.size:
        pivots = np.argmax(np.abs(V), axis=0)
        V = V * np.sign(V[pivots, np.arange(V.shape[1])])
    return w, V


@dataclass(frozen=True)
class CommonKernel:
    K_P: np.ndarray
    K_R: np.ndarray
    K_T: np.ndarray
    K_T_tilde: np.ndarray
    lambdas_T: np.ndarray  # descending
    lambdas_T_tilde: np.ndarray
    v_tilde: np.ndarray  # eigenvectors of K_T, columns
    u_tilde: np.ndarray  # eigenvectors of K_T_tilde, columns

    @property
    def rank(self) -> int:
        return self.K_P.shape[0]

    def lambda_tilde(self, k: int) -> tuple[float, float]:
        """``(v_k^T K_P v_k, u_k^T K_R u_k)`` with ``v_k``, ``u_k`` the k-th eigenvectors of
        ``K_T`` and ``K_T_tilde``."""
        v = self.v_tilde[:, k]
        u = self.u_tilde[:, k]
        return float(v @ self.K_P @ v), float(u @ self.K_R @ u)


def build_common_kernel(K_P, K_R) -> CommonKernel:
    """``K_T = K_P + (I+K_P)^{1/2} K_R (I+K_P)^{1/2}`` and its mirror ``K_T_tilde``."""
    K_P = _check_psd("K_P", K_P)
    K_R = _check_psd("K_R", K_R)
    if K_P.shape != K_R.shape:
        raise ValueError(f"K_P and K_R sizes differ: {K_P.shape} vs {K_R.shape}")
    eye = np.eye(K_P.shape[0])
    root_P = _sym_power(eye + K_P, 0.5)
    root_R = _sym_power(eye + K_R, 0.5)
    K_T = K_P + root_P @ K_R @ root_P
    K_Tt = K_R + root_R @ K_P @ root_R
    K_T, K_Tt = (K_T + K_T.T) / 2, (K_Tt + K_Tt.T) / 2
    lam, V = _eigh_desc(K_T)
    lam_t, U = _eigh_desc(K_Tt)
    return CommonKernel(K_P, K_R, K_T, K_Tt, lam, lam_t, V, U)


def zeta_common(lam_t: float, lt_P: float, lt_R: float, ratios: AspectRatios) -> tuple[float, float]:
    """Alignments ``(zeta_P, zeta_R)`` of a common spike from ``lambda_T`` and the two
    projected strengths; both vanish at or below the threshold."""
    if lam_t <= threshold_tau(ratios):
        return 0.0, 0.0
    bp, bq = ratios.beta_p, ratios.beta_q
    cubic = threshold_polynomial(lam_t, ratios)
    base = lam_t**2 * (lam_t + 1)
    zeta_P = (lam_t - lt_R) * cubic / (base * (lam_t + bq))
    zeta_R = (lam_t - lt_P) * cubic / (base * (lam_t + bp))
    return float(zeta_P), float(zeta_R)


def align_common(kernel: CommonKernel, k: int, ratios: AspectRatios) -> tuple[float, float]:
    """``(zeta_P, zeta_R)`` for the k-th common spike (0-based)."""
    if not 0 <= k < kernel.rank:
        raise IndexError(f"component {k} out of range for rank {kernel.rank}")
    lt_P, lt_R = kernel.lambda_tilde(k)
    return zeta_common(float(kernel.lambdas_T[k]), lt_P, lt_R, ratios)


def align_common_diagonal(lam_P: float, lam_R: float, ratios: AspectRatios) -> tuple[float, float]:
    """Commuting case: ``lambda_T = lambda_P + lambda_R + lambda_P lambda_R``."""
    return zeta_common(lam_P + lam_R + lam_P * lam_R, lam_P, lam_R, ratios)


def skewed_direction(P, R, kernel: CommonKernel, k: int, side: str, ratios: AspectRatios | None = None) -> np.ndarray:
    """Deterministic limit of the k-th (0-based) left or right singular vector of a common spike.

    ``right``: ``R K_P^{1/2} (K_P^{1/2} K_R K_P^{1/2})^{-1} (lambda_T I - K_P) (I + K_P^{-1})^{-1/2} v_k``
    and the mirror expression with ``P``, ``K_R`` and ``u_k`` for ``left``; normalized.
    """
    if side not in ("left", "right"):
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    if not 0 <= k < kernel.rank:
        raise IndexError(f"component {k} out of range for rank {kernel.rank}")
    lam_t = float(kernel.lambdas_T[k])
    if ratios is not None and lam_t <= threshold_tau(ratios):
        raise ValueError(f"lambda_T={lam_t} does not exceed the detection threshold")
    if side == "right":
        K_a, K_b, vec, basis = kernel.K_P, kernel.K_R, kernel.v_tilde[:, k], np.asarray(R, dtype=float)
    else:
        K_a, K_b, vec, basis = kernel.K_R, kernel.K_P, kernel.u_tilde[:, k], np.asarray(P, dtype=float)
    w = np.linalg.eigvalsh(K_a)
    if w.min() <= 1e-12 * max(1.0, w.max()):
        raise np.linalg.LinAlgError(
            "kernel is singular; use align_specific on the other side for the degenerate limit"
        )
    eye = np.eye(kernel.rank)
    half = _sym_power(K_a, 0.5)
    inner = half @ K_b @ half
    # (I + K^{-1})^{-1/2} = K^{1/2} (I + K)^{-1/2}, both functions of K_a.
    damp = half @ _sym_power(eye + K_a, -0.5)
    coef = half @ np.linalg.solve(inner, (lam_t * eye - K_a) @ damp @ vec)
    out = basis @ coef
    norm = np.linalg.norm(out)
    if norm == 0:
        raise ArithmeticError("skewed direction vanished")
    return out / norm
