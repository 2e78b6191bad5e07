"""Closed-form asymptotic predictions for the spectrum of the PLS cross-covariance."""

from .bulk import BulkLaw, atom_at_zero, bulk_law, discriminant, discriminant_coefficients, support_edges
from .common import (
    CommonKernel,
    align_common,
    align_common_diagonal,
    build_common_kernel,
    skewed_direction,
    zeta_common,
)
from .pca import dominance_margin, kt_lower_bound, pca_alignment
from .ratios import AspectRatios
from .resolvent import det_equiv_bilinear, det_equiv_matrix, det_equiv_quadratic_forms
from .spikes import (
    SpikeLaw,
    SpikePrediction,
    align_specific,
    spike_law,
    spike_location,
    spike_map_table,
    threshold_polynomial,
    threshold_tau,
    xi_map,
)
from .stieltjes import (
    StieltjesSolution,
    mbar_coefficients,
    m_coefficients,
    mp_coefficients,
    mp_edges,
    mp_stieltjes,
    solve_mbar,
    stieltjes_m,
)

__all__ = [
    "AspectRatios",
    "BulkLaw",
    "CommonKernel",
    "SpikeLaw",
    "SpikePrediction",
    "StieltjesSolution",
    "align_common",
    "align_common_diagonal",
    "align_specific",
    "atom_at_zero",
    "build_common_kernel",
    "bulk_law",
    "det_equiv_bilinear",
    "det_equiv_matrix",
    "det_equiv_quadratic_forms",
    "discriminant",
    "discriminant_coefficients",
    "dominance_margin",
    "kt_lower_bound",
    "m_coefficients",
    "mbar_coefficients",
    "mp_coefficients",
    "mp_edges",
    "mp_stieltjes",
    "pca_alignment",
    "skewed_direction",
    "solve_mbar",
    "spike_law",
    "spike_location",
    "spike_map_table",
    "stieltjes_m",
    "support_edges",
    "threshold_polynomial",
    "threshold_tau",
    "xi_map",
    "zeta_common",
]
