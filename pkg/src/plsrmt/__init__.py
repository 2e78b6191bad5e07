"""Random-matrix predictions and Monte-Carlo checks for PLS-SVD on high-dimensional data."""

from .mc_harness import ExperimentConfig, pls_vs_pca_grid, run_experiment
from .model_gen import Dimensions, ModelSpec, SignalSpectrum, sample_pair
from .rmt_theory import AspectRatios, bulk_law, spike_law, threshold_tau
from .spectral_core import cross_covariance, squared_singular_spectrum

__version__ = "0.1.0"

__all__ = [
    "AspectRatios",
    "Dimensions",
    "ExperimentConfig",
    "ModelSpec",
    "SignalSpectrum",
    "bulk_law",
    "cross_covariance",
    "pls_vs_pca_grid",
    "run_experiment",
    "sample_pair",
    "spike_law",
    "squared_singular_spectrum",
    "threshold_tau",
]
