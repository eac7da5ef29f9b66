"""Differentially private covariance publishing and its numerical audits.

The package releases a sample covariance matrix under pure epsilon-DP with
either symmetric Laplace noise or a Wishart noise matrix (which keeps the
output positive semidefinite), plus a Gaussian (epsilon, delta) baseline.
Audit and utility modules re-check every privacy and accuracy guarantee by
Monte Carlo.
"""

from .matrix import (
    EigenDecomposition,
    NumericalError,
    Projector,
    SymmetricMatrix,
    eig_sym,
    frobenius_norm,
    l11_norm,
    load_matrix,
    nuclear_norm,
    rank_k_truncation,
    save_matrix,
    spectral_norm,
)
from .mechanisms import (
    DataMatrix,
    MechanismReport,
    PrivacyBudget,
    choose_mechanism,
    covariance,
    gaussian_perturb,
    laplace_perturb,
    wishart_perturb,
)
from .sampling import (
    RngStream,
    WishartParams,
    sample_gamma,
    sample_gaussian,
    sample_laplace,
    sample_symmetric_laplace_matrix,
    sample_wishart,
)

__version__ = "0.1.0"

__all__ = [
    "DataMatrix",
    "EigenDecomposition",
    "MechanismReport",
    "NumericalError",
    "PrivacyBudget",
    "Projector",
    "RngStream",
    "SymmetricMatrix",
    "WishartParams",
    "choose_mechanism",
    "covariance",
    "eig_sym",
    "frobenius_norm",
    "gaussian_perturb",
    "l11_norm",
    "laplace_perturb",
    "load_matrix",
    "nuclear_norm",
    "rank_k_truncation",
    "sample_gamma",
    "sample_gaussian",
    "sample_laplace",
    "sample_symmetric_laplace_matrix",
    "sample_wishart",
    "save_matrix",
    "spectral_norm",
    "wishart_perturb",
]
