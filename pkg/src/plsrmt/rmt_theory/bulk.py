"""Limiting law of the squared singular values of the cross-covariance under pure noise."""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.interpolate import PchipInterpolator

from .ratios import AspectRatios
from .roots import backward_error, companion_roots, polish, polyval
from .stieltjes import mbar_inside


def discriminant_coefficients(ratios: AspectRatios) -> np.ndarray:
    """Coefficients of the cubic ``Delta(x)`` whose sign separates support from gaps."""
    bp, bq = ratios.beta_p, ratios.beta_q
    a = 4 * bp * bq
    b = bp**2 * bq**2 - 10 * bp**2 * bq + bp**2 - 10 * bp * bq**2 - 10 * bp * bq + bq**2
    # Expanded around (1, 1), where every term is at least cubic; this keeps
    # full relative accuracy for ratio pairs near unity.
    u, v = bp - 1, bq - 1
    c = (
        4 * (u**3 + v**3)
        - 6 * u * v * (u + v)
        + 4 * u * v * (u * u + v * v)
        - 16 * u * u * v * v
        - 2 * u * u * v * v * (u + v)
    )
    d = (bp - 1) ** 2 * (bq - 1) ** 2 * (bp - bq) ** 2
    return np.array([a, b, c, d], dtype=float)


def discriminant(x, ratios: AspectRatios) -> np.ndarray:
    return polyval(discriminant_coefficients(ratios), np.asarray(x, dtype=float))


@functools.lru_cache(maxsize=4096)
def _edges(beta_p: float, beta_q: float) -> tuple[float, float]:
    coeffs = discriminant_coefficients(AspectRatios(beta_p, beta_q))
    roots = companion_roots(coeffs)
    # The largest real root is simple and well conditioned.
    real = roots[np.abs(roots.imag) <= 1e-6 * np.maximum(1.0, np.abs(roots))]
    if real.size == 0:
        raise ArithmeticError("discriminant has no real root; coefficient error")
    x_plus = float(polish(coeffs, np.array(real.real.max(), dtype=complex), steps=8).real)
    # Deflate and solve the remaining quadratic explicitly, which handles the
    # double root at zero (beta_p = 1, beta_q = 1 or beta_p = beta_q) cleanly.
    # Its lower coefficients come from the constant and linear terms, so tiny
    # roots near a degenerate ratio pair do not drown in cancellation.
    a, _, c, d = coeffs
    c_defl = -d / x_plus
    b_defl = -(c + d / x_plus) / x_plus
    disc = b_defl * b_defl - 4 * a * c_defl
    if disc >= 0:
        big = -(b_defl + np.copysign(np.sqrt(disc), b_defl)) / 2
        rest = [big / a, c_defl / big if big != 0 else 0.0]
    else:
        rest = [-b_defl / (2 * a)]
    x_minus = float(max(rest))
    if x_minus < -1e-6 * x_plus:
        raise ArithmeticError(
            f"discriminant has fewer than two nonnegative roots (got {x_minus}, {x_plus})"
        )
    x_minus = max(0.0, x_minus)
    if x_minus > 0:
        x_minus = float(polish(coeffs, np.array(x_minus, dtype=complex), steps=8).real)
    return x_minus, x_plus


def support_edges(ratios: AspectRatios) -> tuple[float, float]:
    """``(x_minus, x_plus)``: the two nonnegative roots of the discriminant."""
    return _edges(ratios.beta_p, ratios.beta_q)


def atom_at_zero(ratios: AspectRatios) -> float:
    beta = ratios.beta
    return 1.0 - beta if beta < 1 else 0.0


@dataclass(frozen=True)
class BulkLaw:
    ratios: AspectRatios
    x_minus: float
    x_plus: float
    atom0: float
    _table: list = field(default_factory=list, repr=False, compare=False)

    # -- density ---------------------------------------------------------
    def density(self, x) -> np.ndarray:
        """``f(x) = (beta/pi) Im mbar(x)`` on the support, zero elsewhere."""
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        inside = (x > self.x_minus) & (x < self.x_plus)
        if np.any(inside):
            vals = mbar_inside(x[inside], self.ratios).imag
            out[inside] = np.clip(vals, 0.0, None) * self.ratios.beta / np.pi
        return out

    def discriminant(self, x) -> np.ndarray:
        return discriminant(x, self.ratios)

    # Substitution x = x_minus + width (1 - cos t)/2 removes the square-root
    # edge behaviour and tames the integrable blow-up at a zero left edge.
    def _x_of_t(self, t):
        # sin^2(t/2) instead of (1 - cos t)/2 keeps precision near t = 0.
        return self.x_minus + (self.x_plus - self.x_minus) * np.sin(np.asarray(t) / 2) ** 2

    def _t_of_x(self, x):
        width = self.x_plus - self.x_minus
        return 2 * np.arcsin(np.sqrt(np.clip((x - self.x_minus) / width, 0.0, 1.0)))

    def _integrand_t(self, t):
        half = (self.x_plus - self.x_minus) / 2
        return self.density(np.atleast_1d(self._x_of_t(t))) * half * np.sin(t)

    def continuous_mass(self) -> float:
        """Adaptive quadrature of the density over the support."""
        # Breakpoints toward t = 0 expose edge structure at tiny x to the error estimator.
        breaks = np.pi * 0.5 ** np.arange(1, 60, 4)
        value, _ = integrate.quad(
            lambda t: float(self._integrand_t(t)[0]), 0.0, np.pi, points=breaks,
            epsabs=1e-11, epsrel=1e-10, limit=800,
        )
        return value

    def total_mass(self) -> float:
        return self.continuous_mass() + self.atom0

    def _cdf_table(self):
        if not self._table:
            panels = 512
            nodes, weights = np.polynomial.legendre.leggauss(16)
            # Geometric grading toward t = 0 resolves the integrable blow-up at a zero left edge.
            graded = np.pi / panels * 0.5 ** np.arange(1, 60)
            bounds = np.union1d(np.linspace(0.0, np.pi, panels + 1), graded)
            half = np.diff(bounds) / 2
            mid = (bounds[:-1] + bounds[1:]) / 2
            t = mid[:, None] + half[:, None] * nodes[None, :]
            vals = self._integrand_t(t.ravel()).reshape(t.shape)
            pieces = (vals * weights[None, :]).sum(axis=1) * half
            cumulative = np.concatenate([[0.0], np.cumsum(pieces)])
            self._table.append(PchipInterpolator(bounds, cumulative))
        return self._table[0]

    def cdf(self, x) -> np.ndarray:
        """``mu((-inf, x])``, built from composite Gauss-Legendre panels."""
        x = np.asarray(x, dtype=float)
        interp = self._cdf_table()
        out = np.where(x >= 0, self.atom0, 0.0)
        inside = (x > self.x_minus) & (x < self.x_plus)
        out = out + np.where(inside, interp(self._t_of_x(np.where(inside, x, self.x_minus))), 0.0)
        return np.where(x >= self.x_plus, self.atom0 + float(interp(np.pi)), out)

    def to_dict(self) -> dict:
        return {
            "beta_p": self.ratios.beta_p,
            "beta_q": self.ratios.beta_q,
            "x_minus": self.x_minus,
            "x_plus": self.x_plus,
            "atom0": self.atom0,
        }

    def density_table(self, points: int = 400) -> list[dict]:
        """Rows ``(x, f, F)`` on a grid covering the support."""
        x = self._x_of_t(np.linspace(0.0, np.pi, points))
        return [
            {"x": float(a), "f": float(b), "F": float(c)}
            for a, b, c in zip(x, self.density(x), self.cdf(x))
        ]


def bulk_law(ratios: AspectRatios) -> BulkLaw:
    x_minus, x_plus = support_edges(ratios)
    return BulkLaw(ratios=ratios, x_minus=x_minus, x_plus=x_plus, atom0=atom_at_zero(ratios))


def discriminant_residual(x: float, ratios: AspectRatios) -> float:
    """Backward error of ``x`` as a root of the discriminant."""
    return float(backward_error(discriminant_coefficients(ratios), x))
