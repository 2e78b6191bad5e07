"""Detection threshold, spike locations and alignments of individual components."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .ratios import AspectRatios


class BelowThreshold(Exception):
    """Raised when a spike quantity is requested for a signal that does not separate."""


def threshold_polynomial(lam: float, ratios: AspectRatios) -> float:
    """``lam^3 - s lam - 2 beta_p beta_q`` with ``s = beta_p beta_q + beta_p + beta_q``."""
    bp, bq = ratios.beta_p, ratios.beta_q
    return lam**3 - (bp * bq + bp + bq) * lam - 2 * bp * bq


def threshold_tau(ratios: AspectRatios) -> float:
    """Largest root of the depressed threshold cubic, by the trigonometric formula."""
    bp, bq = ratios.beta_p, ratios.beta_q
    s = bp * bq + bp + bq
    arg = bp * bq * (s / 3) ** -1.5
    return 2 * math.sqrt(s / 3) * math.cos(math.acos(min(1.0, arg)) / 3)


def xi_map(lam: float, ratios: AspectRatios) -> float:
    """``(lam+1)(lam+beta_p)(lam+beta_q)/lam^2`` with no threshold check."""
    bp, bq = ratios.beta_p, ratios.beta_q
    return (lam + 1) * (lam + bp) * (lam + bq) / lam**2


def spike_location(lam: float, ratios: AspectRatios) -> float | None:
    """Limit of the isolated squared singular value, or ``None`` below threshold."""
    if not lam > 0:
        raise ValueError(f"signal strength must be positive, got {lam}")
    if lam <= threshold_tau(ratios):
        return None
    return xi_map(lam, ratios)


def align_specific(lam: float, side: str, ratios: AspectRatios) -> float:
    """Squared alignment of the spike generated by ``M`` (side "M") or ``N`` (side "N")."""
    if side not in ("M", "N"):
        raise ValueError(f"side must be 'M' or 'N', got {side!r}")
    if not lam > 0:
        raise ValueError(f"signal strength must be positive, got {lam}")
    if lam <= threshold_tau(ratios):
        return 0.0
    other = ratios.beta_q if side == "M" else ratios.beta_p
    return threshold_polynomial(lam, ratios) / (lam * (lam + 1) * (lam + other))


@dataclass(frozen=True)
class SpikePrediction:
    component: str  # "M1", "N2", "T1", ...
    lam: float
    xi: float | None
    zeta_left: float
    zeta_right: float
    lambda_tilde_P: float | None = None
    lambda_tilde_R: float | None = None

    @property
    def detected(self) -> bool:
        return self.xi is not None

    def to_dict(self) -> dict:
        return {
            "component": self.component,
            "lambda": self.lam,
            "xi": self.xi,
            "zeta_left": self.zeta_left,
            "zeta_right": self.zeta_right,
            "lambda_tilde_P": self.lambda_tilde_P,
            "lambda_tilde_R": self.lambda_tilde_R,
        }


@dataclass(frozen=True)
class SpikeLaw:
    """Predictions for every signal component of one model.

    For an ``M`` spike only the left vector has a deterministic target
    (``zeta_left = zeta_M``, ``zeta_right = 0``); the ``N`` case mirrors it.
    Common spikes carry ``(zeta_P, zeta_R)``.
    """

    ratios: AspectRatios
    tau: float
    x_plus: float
    components: list[SpikePrediction] = field(default_factory=list)

    def detected(self) -> list[SpikePrediction]:
        """Separated spikes sorted by decreasing location."""
        found = [c for c in self.components if c.detected]
        return sorted(found, key=lambda c: c.xi, reverse=True)

    def to_dict(self) -> dict:
        return {
            "beta_p": self.ratios.beta_p,
            "beta_q": self.ratios.beta_q,
            "tau": self.tau,
            "x_plus": self.x_plus,
            "components": [c.to_dict() for c in self.components],
        }


def spike_law(ratios: AspectRatios, lambdas_M=(), lambdas_N=(), kernel=None) -> SpikeLaw:
    """Assemble predictions for specific components and an optional common kernel."""
    from .bulk import support_edges
    from .common import align_common

    tau = threshold_tau(ratios)
    comps = []
    for k, lam in enumerate(lambdas_M, 1):
        comps.append(SpikePrediction(f"M{k}", lam, spike_location(lam, ratios), align_specific(lam, "M", ratios), 0.0))
    for k, lam in enumerate(lambdas_N, 1):
        comps.append(SpikePrediction(f"N{k}", lam, spike_location(lam, ratios), 0.0, align_specific(lam, "N", ratios)))
    if kernel is not None:
        for k in range(kernel.rank):
            lam_t = float(kernel.lambdas_T[k])
            xi = spike_location(lam_t, ratios) if lam_t > 0 else None
            zp, zr = align_common(kernel, k, ratios)
            lp, lr = kernel.lambda_tilde(k)
            comps.append(SpikePrediction(f"T{k + 1}", lam_t, xi, zp, zr, lp, lr))
    return SpikeLaw(ratios=ratios, tau=tau, x_plus=support_edges(ratios)[1], components=comps)


def spike_map_table(ratios: AspectRatios, lambdas, lambda_tilde_P=None, lambda_tilde_R=None) -> list[dict]:
    """Rows ``(lambda, xi, zeta_P, zeta_R, zeta_M, zeta_N)`` with ``lambda`` the spike eigenvalue.

    The common-spike columns treat ``lambda`` as ``lambda_T``. Without explicit
    ``lambda_tilde`` values the symmetric diagonal split
    ``lambda_P = lambda_R = sqrt(1 + lambda) - 1`` is used.
    """
    from .common import zeta_common

    rows = []
    for lam in lambdas:
        lam = float(lam)
        xi = spike_location(lam, ratios)
        split = math.sqrt(1 + lam) - 1
        lp = split if lambda_tilde_P is None else lambda_tilde_P
        lr = split if lambda_tilde_R is None else lambda_tilde_R
        zp, zr = zeta_common(lam, lp, lr, ratios)
        rows.append(
            {
                "lambda": lam,
                "xi": xi if xi is not None else float("nan"),
                "zeta_P": zp,
                "zeta_R": zr,
                "zeta_M": align_specific(lam, "M", ratios),
                "zeta_N": align_specific(lam, "N", ratios),
            }
        )
    return rows
