"""Deterministic equivalents of the resolvents of ``K = S^T S`` and ``K_tilde = S S^T``."""

from __future__ import annotations

import numpy as np

from .ratios import AspectRatios
from .stieltjes import mp_branch, stieltjes_m


def _view_equivalent(m_view: complex, own: np.ndarray, other: np.ndarray, specific: np.ndarray,
                     dim_own: int, dim_other: int) -> np.ndarray:
    """Inverse of the bracketed matrix defining the per-view equivalent.

    ``own`` (dim_own x r) and ``other`` (dim_other x r) are the loading
    matrices, ``specific`` (n x dim_own) the view-specific signal.
    """
    r = own.shape[1]
    gram_other = other.T @ other / dim_other  # r x r kernel of the other view
    c = (1 + m_view) / m_view
    # Push-through: other^T (c I + other other^T/d)^{-1} other = d (c I_r + K)^{-1} K.
    middle = np.linalg.solve(c * np.eye(r) + gram_other, gram_other) if r else np.zeros((0, 0))
    A = np.eye(dim_own, dtype=complex) / m_view
    A = A + (specific.T @ specific + own @ own.T) / (dim_own * (1 + m_view))
    A = A + own @ middle @ own.T / (dim_own * (1 + m_view) * m_view)
    return A


def _inner(P, R, M, N, z: complex, side: str) -> tuple[np.ndarray, complex]:
    """``(A, c)`` with ``Qbar(z) = c A^{-1}``."""
    P, R, M, N = (np.asarray(a, dtype=float) for a in (P, R, M, N))
    n, p = M.shape
    q = N.shape[1]
    ratios = AspectRatios.from_dims(n, p, q)
    sol = stieltjes_m(z, ratios)
    if side == "right":
        m_outer, beta, own, other, specific, dim_own, dim_other = sol.m_tilde, ratios.beta_q, R, P, N, q, p
    elif side == "left":
        m_outer, beta, own, other, specific, dim_own, dim_other = sol.m, ratios.beta_p, P, R, M, p, q
    else:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    w = -1.0 / m_outer
    m_view = mp_branch(w, beta)
    A = _view_equivalent(m_view, own, other, specific, dim_own, dim_other)
    return A, -1.0 / (complex(z) * m_outer)


def det_equiv_matrix(P, R, M, N, z: complex, side: str = "right") -> np.ndarray:
    """``Qbar(z)`` (q x q, side "right") or ``Qbar_tilde(z)`` (p x p, side "left")."""
    A, c = _inner(P, R, M, N, z, side)
    try:
        return c * np.linalg.inv(A)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"inner matrix is singular at z={z}") from exc


def _check_real_unit(z, probes) -> tuple[complex, np.ndarray]:
    z = complex(z)
    if z.imag != 0:
        raise ValueError("bilinear forms are evaluated at real z")
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    if np.any(np.abs(np.linalg.norm(probes, axis=1) - 1) > 1e-8):
        raise ValueError("probe vectors must be unit norm")
    return z, probes


def det_equiv_quadratic_forms(factors, z: float, probes, side: str = "right") -> np.ndarray:
    """``v^T Qbar(z) v`` for each row ``v`` of ``probes``, with one factorization."""
    z, probes = _check_real_unit(z, probes)
    A, c = _inner(factors.P, factors.R, factors.M, factors.N, z, side)
    try:
        X = np.linalg.solve(A, probes.T.astype(complex))
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"inner matrix is singular at z={z}") from exc
    return (c * np.einsum("ij,ji->i", probes, X)).real


def det_equiv_bilinear(factors, z: float, a, b, side: str = "right") -> float:
    """``a^T Qbar(z) b`` for real ``z`` above the bulk, assembled from the true factors.

    ``factors`` needs attributes ``P`` (p x r), ``R`` (q x r), ``M`` (n x p)
    and ``N`` (n x q).
    """
    z, _ = _check_real_unit(z, [a, b])
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    A, c = _inner(factors.P, factors.R, factors.M, factors.N, z, side)
    try:
        x = np.linalg.solve(A, b.astype(complex))
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"inner matrix is singular at z={z}") from exc
    return float((c * (a @ x)).real)
