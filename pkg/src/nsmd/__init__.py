"""ReLU-based nonlinear symmetric matrix decomposition.

Fit ``max(0, U U^T) ~ M`` for a nonnegative sparse symmetric ``M`` with the
accelerated alternating partial Bregman (AAPB) method, and compare against
symmetric NMF baselines.
"""
from .aapb import ConfigError, SolveResult, SolveTrace, SolverParams, run
from .baselines import BaselineParams, symanls_run, symhals_run
from .datagen import SynthSpec, build_similarity, gen_synthetic
from .io import load_matrix, save_matrix
from .kernel import KernelContext, bregman_dist, check_lsmad, grad_F_U, grad_psi, psi
from .matrix import InvalidInputError, SupportPattern, build_support, frobenius_norm, relative_error

__version__ = "0.1.0"
