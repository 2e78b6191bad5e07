"""Stieltjes transforms of the limiting spectra and of the Marchenko-Pastur laws."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .ratios import AspectRatios
from .roots import backward_error, companion_roots, track_branch

# Relative imaginary part below which a root is treated as real.
_IMAG_TOL = 1e-9


def mbar_coefficients(x, ratios: AspectRatios) -> np.ndarray:
    """Cubic in ``mbar`` whose valid root gives the bulk density, highest degree first."""
    bp, bq = ratios.beta_p, ratios.beta_q
    x = np.asarray(x)
    return np.stack(
        np.broadcast_arrays(
            -bp * bq * x**2,
            (bp + bq - 2 * bp * bq) * x,
            x - (1 - bp) * (1 - bq),
            np.ones_like(x),
        ),
        axis=-1,
    )


def _mbar_roots(x, ratios: AspectRatios) -> np.ndarray:
    """The three roots of the bulk cubic, batched over ``x``.

    Solved in ``w = mbar x``, whose cubic is ``A w (w - w_c - h)(w - w_c + h) + x (w + 1)``
    with ``A = -beta_p beta_q``, ``w_c = -B / 2A`` and ``h = |beta_p - beta_q| / 2|A|``.
    Companion roots are refined by Newton steps on that factored form, which
    stays accurate near the degenerate points ``w = 0`` and ``w = w_c +- h``
    where the density has a hard edge at zero. The backward error of the
    original cubic is invariant under the rescaling.
    """
    bp, bq = ratios.beta_p, ratios.beta_q
    x = np.asarray(x, dtype=float)
    coeffs = np.stack(
        np.broadcast_arrays(
            np.full_like(x, -bp * bq), np.full_like(x, bp + bq - 2 * bp * bq), x - (1 - bp) * (1 - bq), x
        ),
        axis=-1,
    )
    w, _ = _polish_factored(x[..., None], companion_roots(coeffs), ratios)
    return w / x[..., None]


def _factored_parts(ratios: AspectRatios) -> tuple[float, float, float]:
    bp, bq = ratios.beta_p, ratios.beta_q
    A = -bp * bq
    w_c = (bp + bq - 2 * bp * bq) / (2 * bp * bq)
    h = abs(bp - bq) / (2 * bp * bq)
    return A, w_c, h


def _polish_factored(x, w, ratios: AspectRatios, steps: int = 60) -> tuple[np.ndarray, np.ndarray]:
    """Refined roots and their backward errors."""
    A, w_c, h = _factored_parts(ratios)
    # w_c + 1 in closed form, free of cancellation when w_c is near -1.
    w_c1 = (ratios.beta_p + ratios.beta_q) / (2 * ratios.beta_p * ratios.beta_q)
    # Iterate on the offset d = w - w_c so roots close to w_c keep full relative precision.
    d = np.asarray(w, dtype=complex) - w_c

    def value_and_scale(d):
        w = w_c + d
        val = A * w * (d - h) * (d + h) + x * (w_c1 + d)
        scale = abs(A) * np.abs(w) * np.abs(d - h) * np.abs(d + h) + x * (np.abs(w) + 1)
        return val, np.where(scale > 0, scale, 1.0)

    val, scale = value_and_scale(d)
    for _ in range(steps):
        deriv = A * ((d - h) * (d + h) + 2 * (w_c + d) * d) + x
        safe = deriv != 0
        trial = d - np.where(safe, val / np.where(safe, deriv, 1.0), 0.0)
        t_val, t_scale = value_and_scale(trial)
        # Residual decrease, not backward error: near a double root the backward
        # error stalls while Newton is still halving the distance.
        better = np.abs(t_val) < np.abs(val)
        if not np.any(better):
            break
        d = np.where(better, trial, d)
        val = np.where(better, t_val, val)
        scale = np.where(better, t_scale, scale)
    return w_c + d, np.abs(val) / scale


def _near_double_root(x, ratios: AspectRatios) -> np.ndarray:
    # Local quadratic model around w_c; seeds the conjugate pair when it
    # nearly coalesces and companion eigenvalues cannot separate it.
    A, w_c, h = _factored_parts(ratios)
    x = np.asarray(x, dtype=float)
    if w_c == 0:
        return np.full(x.shape, np.nan + 0j)
    w_c1 = (ratios.beta_p + ratios.beta_q) / (2 * ratios.beta_p * ratios.beta_q)
    delta = np.sqrt(complex(h * h) - x * w_c1 / (A * w_c) + 0j)
    delta = np.where(delta.imag < 0, -delta, delta)
    w, err = _polish_factored(x, w_c + delta, ratios)
    # The seed is only meaningful near coalescence; discard it when it did not land on a root.
    return np.where(err < 1e-12, w / x, np.nan + 0j)


def _valid_inside(x, ratios: AspectRatios) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    cands = np.concatenate([_mbar_roots(x, ratios), _near_double_root(x, ratios)[..., None]], axis=-1)
    imag = np.where(np.isfinite(cands.imag), cands.imag, -np.inf)
    pick = np.argmax(imag, axis=-1)
    return np.take_along_axis(cands, pick[..., None], axis=-1)[..., 0]


def m_coefficients(z, ratios: AspectRatios) -> np.ndarray:
    """Cubic in ``m``, the Stieltjes transform of the spectrum of ``K = S^T S``."""
    bp, bq = ratios.beta_p, ratios.beta_q
    z = np.asarray(z)
    rho = bp / bq
    return np.stack(
        np.broadcast_arrays(
            -rho * z**2,
            (1 + bp - 2 * rho) * z,
            z - (1 - bq) * (rho - 1),
            np.ones_like(z),
        ),
        axis=-1,
    )


def mp_coefficients(z, beta: float) -> np.ndarray:
    """Quadratic ``z m^2 - (beta - 1 - z) m + 1``."""
    z = np.asarray(z)
    return np.stack(np.broadcast_arrays(z, -(beta - 1 - z), np.ones_like(z)), axis=-1)


def mp_edges(beta: float) -> tuple[float, float]:
    root = np.sqrt(beta)
    return float((root - 1) ** 2), float((root + 1) ** 2)


def _middle_real_root(roots: np.ndarray) -> complex:
    return complex(np.sort(roots.real)[1])


def solve_mbar(x: float, ratios: AspectRatios) -> complex:
    """Valid root ``mbar(x)`` for real ``x > 0``.

    Inside the support the cubic has a conjugate pair and the root with
    positive imaginary part is returned. Above the support all three roots are
    real and ordered spurious < valid < 0 < spurious, so the middle one is
    returned. In a gap ``0 < x < x_minus`` the branch is tracked from the upper
    half plane.
    """
    from .bulk import support_edges

    x = float(x)
    if not x > 0:
        raise ValueError(f"x must be positive, got {x}")
    roots = _mbar_roots(x, ratios)
    top = complex(_valid_inside(np.array(x), ratios))
    if top.imag > _IMAG_TOL * max(1.0, abs(top)):
        return complex(top)
    _, x_plus = support_edges(ratios)
    if x >= x_plus:
        return _middle_real_root(roots)
    return complex(track_branch(lambda w: mbar_coefficients(w, ratios), x).real)


def mbar_inside(x: np.ndarray, ratios: AspectRatios) -> np.ndarray:
    """Vectorized root with the largest imaginary part (the valid one on the support)."""
    return _valid_inside(x, ratios)


@dataclass(frozen=True)
class StieltjesSolution:
    z: complex
    m: complex
    m_tilde: complex
    residual: float


def stieltjes_m(z: complex, ratios: AspectRatios) -> StieltjesSolution:
    """``m(z)`` and ``m_tilde(z)`` for the kernels ``K`` (q x q) and ``K_tilde`` (p x p)."""
    from .bulk import support_edges

    z = complex(z)
    coeff_fn = lambda w: m_coefficients(w, ratios)  # noqa: E731
    if z.imag != 0:
        m = track_branch(coeff_fn, z)
    else:
        x = z.real
        x_minus, x_plus = support_edges(ratios)
        if x == 0:
            raise ValueError("z = 0 is a pole of the Stieltjes transform")
        if x_minus <= x <= x_plus:
            raise ValueError(f"real z={x} lies on the support [{x_minus}, {x_plus}]")
        if x > x_plus:
            m = _middle_real_root(companion_roots(coeff_fn(x)))
        else:
            m = complex(track_branch(coeff_fn, x).real)
    rho = ratios.q_over_p
    m_tilde = rho * m - (1 - rho) / z
    residual = float(backward_error(coeff_fn(z), m))
    return StieltjesSolution(z=z, m=m, m_tilde=m_tilde, residual=residual)


def mp_branch(w: complex, beta: float) -> complex:
    """Marchenko-Pastur Stieltjes transform at any ``w`` off the bulk, complex allowed."""
    w = complex(w)
    lo, hi = mp_edges(beta)
    if w.imag == 0 and w.real >= hi:
        x = w.real
        # Root nearer zero, via the product of roots 1/x to avoid cancellation.
        disc = max(0.0, (beta - 1 - x) ** 2 - 4 * x)
        return complex(2.0 / ((beta - 1 - x) - np.sqrt(disc)))
    return track_branch(lambda u: mp_coefficients(u, beta), w)


def mp_stieltjes(x: float, beta: float) -> float:
    """Real valid root of ``x m^2 - (beta - 1 - x) m + 1 = 0`` off the bulk.

    Above the bulk both roots are negative and the one nearer zero is valid.
    """
    x = float(x)
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    lo, hi = mp_edges(beta)
    if lo < x < hi:
        raise ValueError(f"x={x} lies inside the Marchenko-Pastur bulk ({lo}, {hi})")
    if x == 0:
        raise ValueError("x = 0 is not an admissible evaluation point")
    return float(mp_branch(x, beta).real)
