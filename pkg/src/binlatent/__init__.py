"""Spectral learning of binary latent variable models ``x = W^T h + sigma eps``."""

from .baselines import als, oracle_ls
from .datagen import InstanceSpec, make_instance
from .denoise import complete_diagonal, fit_whitened_tensor_masked, mask_offdiag
from .eigensolver import SolverConfig, enumerate_eigenpairs, oncm_solve, power_deflation, power_solve
from .errors import (
    BinLatentError,
    ConvergenceError,
    DataError,
    DimensionError,
    NumericalError,
    RankError,
    SurvivorCountError,
)
from .learn import aligned_error, algorithm1, algorithm2, check_conditions, likelihood_select, wls_refine
from .moments import empirical_moments, noise_correct, whiten, whitened_tensor
from .tensor import Eigenpair, Stability, SymTensor3

__version__ = "0.1.0"

__all__ = [
    "als", "oracle_ls", "InstanceSpec", "make_instance", "complete_diagonal", "fit_whitened_tensor_masked",
    "mask_offdiag", "SolverConfig", "enumerate_eigenpairs", "oncm_solve", "power_deflation", "power_solve",
    "BinLatentError", "ConvergenceError", "DataError", "DimensionError", "NumericalError", "RankError",
    "SurvivorCountError", "aligned_error", "algorithm1", "algorithm2", "check_conditions", "likelihood_select",
    "wls_refine", "empirical_moments", "noise_correct", "whiten", "whitened_tensor", "Eigenpair", "Stability",
    "SymTensor3",
]
