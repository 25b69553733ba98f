"""Stochastic time-fractional diffusion driven by fractional Gaussian noise.

Backward-Euler convolution quadrature in time, P1 finite elements on (0, 1)
in space, and Monte Carlo harnesses for strong convergence rates.
"""

from .cq import (
    CqWeights,
    bdf1_weights,
    predicted_spatial_rate,
    predicted_temporal_rate,
    theoretical_rho,
)
from .fem import FemFunction, Mesh, assemble_mass, assemble_stiffness, l2_norm, solve_tridiagonal
from .fgn import FgnParams, circulant_spectrum, fgn_autocovariance, sample_fgn, stream
from .noise import FgnTrajectory, NoiseSpec, eigenpair, mode_load_coefficients, sample_trajectory
from .oracle import SineExpansion, exact_deterministic, mittag_leffler, spectral_stochastic_reference
from .stepper import SolverConfig, SolutionHistory, run
from .studies import RateTable, StudyConfig, mean_rate, rate, spatial_study, temporal_study

__version__ = "0.1.0"
