"""Polynomial roots via companion matrices, Newton polishing and branch tracking.

Coefficient arrays are ordered from the highest degree down and may carry
leading batch dimensions: shape ``(..., degree + 1)``.
"""

from __future__ import annotations

import numpy as np


def polyval(coeffs: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Horner evaluation broadcasting over the batch dimensions."""
    coeffs = np.asarray(coeffs)
    out = np.zeros(np.broadcast_shapes(coeffs.shape[:-1], np.shape(x)), dtype=np.result_type(coeffs, x))
    for k in range(coeffs.shape[-1]):
        out = out * x + coeffs[..., k]
    return out


def polyder(coeffs: np.ndarray) -> np.ndarray:
    coeffs = np.asarray(coeffs)
    deg = coeffs.shape[-1] - 1
    powers = np.arange(deg, 0, -1)
    return coeffs[..., :-1] * powers


def backward_error(coeffs: np.ndarray, x: np.ndarray) -> np.ndarray:
    """``|P(x)| / sum_k |c_k| |x|^k``: the residual relative to the size of its terms.

    This is the normwise backward error of ``x`` as a root; it stays meaningful
    when the coefficients span many orders of magnitude.
    """
    coeffs = np.asarray(coeffs)
    scale = polyval(np.abs(coeffs), np.abs(x))
    return np.abs(polyval(coeffs, x)) / np.where(scale > 0, scale, 1.0)


def companion_roots(coeffs: np.ndarray) -> np.ndarray:
    """All roots of each polynomial in the batch, shape ``(..., degree)``."""
    coeffs = np.asarray(coeffs, dtype=complex)
    deg = coeffs.shape[-1] - 1
    lead = coeffs[..., :1]
    if np.any(lead == 0):
        raise ValueError("leading coefficient vanishes; polynomial degree drops")
    monic = coeffs[..., 1:] / lead
    batch = coeffs.shape[:-1]
    comp = np.zeros(batch + (deg, deg), dtype=complex)
    comp[..., 0, :] = -monic
    if deg > 1:
        idx = np.arange(deg - 1)
        comp[..., idx + 1, idx] = 1.0
    roots = np.linalg.eigvals(comp)
    return polish(coeffs[..., None, :], roots)


def polish(coeffs: np.ndarray, roots: np.ndarray, steps: int = 3) -> np.ndarray:
    """Newton refinement; a step is kept only when it lowers the backward error."""
    roots = np.asarray(roots, dtype=complex)
    deriv = polyder(coeffs)
    err = backward_error(coeffs, roots)
    for _ in range(steps):
        dp = polyval(deriv, roots)
        safe = dp != 0
        step = np.where(safe, polyval(coeffs, roots) / np.where(safe, dp, 1.0), 0.0)
        trial = roots - step
        trial_err = backward_error(coeffs, trial)
        better = trial_err < err
        roots = np.where(better, trial, roots)
        err = np.where(better, trial_err, err)
    return roots


def track_branch(coeff_fn, z: complex, eta_start: float = 1e8, ratio: float = 0.7) -> complex:
    """Follow the Stieltjes-transform branch of ``coeff_fn`` down to ``z``.

    The walk starts at ``Re z + i*eta_start`` on the root nearest ``-1/z`` (the
    tail of any probability Stieltjes transform) and descends vertically,
    keeping at each step the root closest to the previous one. For ``Im z < 0``
    the mirror point is tracked and conjugated.
    """
    z = complex(z)
    if z.imag < 0:
        return track_branch(coeff_fn, z.conjugate(), eta_start, ratio).conjugate()
    x, target = z.real, z.imag
    scale = max(1.0, abs(x))
    eta_top = max(eta_start * scale, 10 * target)
    floor = max(target, 1e-12 * scale)
    n_steps = max(2, int(np.ceil(np.log(eta_top / floor) / -np.log(ratio))))
    etas = np.geomspace(eta_top, floor, n_steps)
    path = np.append(x + 1j * etas, z)
    all_roots = companion_roots(np.stack([coeff_fn(w) for w in path]))
    current = -1.0 / path[0]
    for roots in all_roots:
        current = roots[np.argmin(np.abs(roots - current))]
    return complex(current)
