"""Comparison with PCA applied to each view separately."""

from __future__ import annotations

import math

from .ratios import AspectRatios
from .spikes import threshold_tau


def pca_alignment(lam: float, beta: float) -> float:
    """``1 - (lam + beta)/(lam (lam + 1))`` above ``sqrt(beta)``, zero below."""
    if not lam > 0:
        raise ValueError(f"signal strength must be positive, got {lam}")
    if lam <= math.sqrt(beta):
        return 0.0
    return max(0.0, 1.0 - (lam + beta) / (lam * (lam + 1)))


def dominance_margin(ratios: AspectRatios) -> tuple[float, float, float]:
    """``(m, tau, m - tau)`` with ``m = sqrt(bp) + sqrt(bq) + sqrt(bp bq)``.

    ``m`` is the smallest common-kernel eigenvalue reachable when PCA detects in
    both views, so a positive margin means PLS detects whatever PCA does.
    """
    bp, bq = ratios.beta_p, ratios.beta_q
    m = math.sqrt(bp) + math.sqrt(bq) + math.sqrt(bp * bq)
    tau = threshold_tau(ratios)
    return m, tau, m - tau


def kt_lower_bound(lambda_P_min: float, lambda_R_min: float) -> float:
    """Lower bound on every common-kernel eigenvalue from the smallest view eigenvalues."""
    return lambda_P_min + lambda_R_min + lambda_P_min * lambda_R_min
