"""Input-perturbation mechanisms for publishing a sample covariance matrix.

Three noise families: symmetric Laplace (pure epsilon-DP, entrywise
calibration), Wishart (pure epsilon-DP, keeps the output positive
semidefinite), and a symmetric Gaussian baseline for (epsilon, delta)-DP.
A deterministic chooser picks Laplace or Wishart from the sensitivity profile
of the matrix being published.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .matrix import SymmetricMatrix, eig_sym, spectral_norm
from .sampling import (
    RngStream,
    WishartParams,
    sample_symmetric_gaussian_matrix,
    sample_symmetric_laplace_matrix,
    sample_wishart,
)

__all__ = [
    "COLUMN_NORM_TOL",
    "DataMatrix",
    "PrivacyBudget",
    "MechanismReport",
    "covariance",
    "laplace_noise_scale",
    "wishart_scale_eigenvalue",
    "gaussian_noise_sigma",
    "laplace_perturb",
    "wishart_perturb",
    "gaussian_perturb",
    "choose_mechanism",
]

COLUMN_NORM_TOL = 1e-12
SCALINGS = ("mean", "gram")


class DataMatrix:
    """d x n matrix whose columns are data points with l2 norm at most 1."""

    __slots__ = ("_pts",)

    def __init__(self, points):
        pts = np.array(points, dtype=np.float64)
        if pts.ndim != 2 or pts.shape[0] < 1 or pts.shape[1] < 1:
            raise ValueError(f"expected a d x n grid with d, n >= 1, got shape {pts.shape}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("data entries must be finite")
        norms = np.sqrt((pts**2).sum(axis=0))
        bad = np.nonzero(norms > 1.0 + COLUMN_NORM_TOL)[0]
        if bad.size:
            raise ValueError(
                f"columns {bad.tolist()} have l2 norm > 1 "
                f"(max {norms[bad].max():.6g}); rescale the data first"
            )
        pts.flags.writeable = False
        self._pts = pts

    @property
    def dim(self) -> int:
        return self._pts.shape[0]

    @property
    def count(self) -> int:
        return self._pts.shape[1]

    @property
    def points(self) -> np.ndarray:
        return self._pts

    def column(self, i: int) -> np.ndarray:
        return self._pts[:, i].copy()

    def with_column(self, i: int, v) -> "DataMatrix":
        """New DataMatrix with column i replaced by v."""
        pts = self._pts.copy()
        pts[:, i] = np.asarray(v, dtype=np.float64)
        return DataMatrix(pts)

    def __repr__(self):
        return f"DataMatrix(dim={self.dim}, count={self.count})"


@dataclass(frozen=True)
class PrivacyBudget:
    """Privacy parameters: epsilon > 0 and delta in [0, 1) (0 for pure DP)."""

    epsilon: float
    delta: float = 0.0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if not 0.0 <= self.delta < 1.0:
            raise ValueError(f"delta must lie in [0, 1), got {self.delta}")


@dataclass(frozen=True)
class MechanismReport:
    """Full provenance of one perturbation run."""

    mechanism: str
    dim: int
    count: int
    epsilon: float
    delta: float
    seed: int
    stream: int
    covariance_scaling: str
    noise_spectral_norm: float
    min_output_eigenvalue: float
    output: SymmetricMatrix

    def to_dict(self) -> dict:
        return {
            "mechanism": self.mechanism,
            "d": self.dim,
            "n": self.count,
            "epsilon": self.epsilon,
            "delta": self.delta,
            "seed": self.seed,
            "stream": self.stream,
            "covariance_scaling": self.covariance_scaling,
            "noise_spectral_norm": self.noise_spectral_norm,
            "min_output_eigenvalue": self.min_output_eigenvalue,
            "output": [[float(x) for x in row] for row in self.output.to_array()],
        }


def _check_scaling(scaling: str) -> None:
    if scaling not in SCALINGS:
        raise ValueError(f"scaling must be one of {SCALINGS}, got {scaling!r}")


def covariance(X: DataMatrix, scaling: str = "mean") -> SymmetricMatrix:
    """Sample covariance (1/n) X X^T, or the unnormalized Gram matrix X X^T
    under ``gram`` scaling."""
    _check_scaling(scaling)
    g = X.points @ X.points.T
    if scaling == "mean":
        g = g / X.count
    return SymmetricMatrix(g)


def laplace_noise_scale(d: int, n: int, epsilon: float, scaling: str = "mean") -> float:
    """Per-entry Laplace scale 2d/(n epsilon), calibrated to the l1
    sensitivity bound of the covariance map (n drops out under gram scaling).
    """
    _check_scaling(scaling)
    return 2.0 * d / (n * epsilon) if scaling == "mean" else 2.0 * d / epsilon


def wishart_scale_eigenvalue(n: int, epsilon: float, scaling: str = "mean") -> float:
    """Isotropic Wishart scale eigenvalue 3/(2 n epsilon), calibrated to the
    nuclear-norm sensitivity bound (n drops out under gram scaling)."""
    _check_scaling(scaling)
    return 3.0 / (2.0 * n * epsilon) if scaling == "mean" else 3.0 / (2.0 * epsilon)


def gaussian_noise_sigma(n: int, epsilon: float, delta: float, scaling: str = "mean") -> float:
    """Per-entry Gaussian sigma = c * s2 / epsilon with c just above
    sqrt(2 ln(1.25/delta)) and l2 sensitivity s2 = 2/n (2 under gram scaling).
    """
    _check_scaling(scaling)
    if not 0.0 < delta < 1.0:
        raise ValueError(f"the Gaussian baseline needs delta in (0, 1), got {delta}")
    c = math.sqrt(2.0 * math.log(1.25 / delta)) + 1e-9
    s2 = 2.0 / n if scaling == "mean" else 2.0
    return c * s2 / epsilon


def _report(mechanism, X, budget, rng, scaling, output, unperturbed) -> MechanismReport:
    noise = output - unperturbed
    return MechanismReport(
        mechanism=mechanism,
        dim=X.dim,
        count=X.count,
        epsilon=budget.epsilon,
        delta=budget.delta,
        seed=rng.seed,
        stream=rng.stream_id,
        covariance_scaling=scaling,
        noise_spectral_norm=spectral_norm(noise),
        min_output_eigenvalue=float(eig_sym(output).eigenvalues[-1]),
        output=output,
    )


def laplace_perturb(
    X: DataMatrix, budget: PrivacyBudget, rng: RngStream, scaling: str = "mean"
) -> MechanismReport:
    """Publish the covariance with symmetric entrywise Laplace noise.

    Draws (d^2+d)/2 i.i.d. Laplace(0, 2d/(n epsilon)) values into the upper
    triangle, mirrors them, and adds the matrix to the covariance.  Pure
    epsilon-DP; the output is NOT guaranteed positive semidefinite.
    """
    if budget.delta != 0.0:
        raise ValueError("the Laplace mechanism is pure-DP; delta must be 0")
    _check_scaling(scaling)
    a = covariance(X, scaling)
    scale = laplace_noise_scale(X.dim, X.count, budget.epsilon, scaling)
    noise = sample_symmetric_laplace_matrix(rng, X.dim, scale)
    return _report("laplace", X, budget, rng, scaling, a + noise, a)


def wishart_perturb(
    X: DataMatrix, budget: PrivacyBudget, rng: RngStream, scaling: str = "mean"
) -> MechanismReport:
    """Publish the covariance with a Wishart noise matrix.

    Adds W ~ W_d(d+1, c I) with c = 3/(2 n epsilon).  The degrees of freedom
    are pinned at exactly d+1 so the density's determinant exponent vanishes
    and the privacy ratio reduces to a pure trace term.  Pure epsilon-DP, and
    the output stays positive semidefinite because both summands are.
    """
    if budget.delta != 0.0:
        raise ValueError("the Wishart mechanism is pure-DP; delta must be 0")
    _check_scaling(scaling)
    a = covariance(X, scaling)
    c = wishart_scale_eigenvalue(X.count, budget.epsilon, scaling)
    noise = sample_wishart(rng, WishartParams(X.dim, X.dim + 1, c))
    return _report("wishart", X, budget, rng, scaling, a + noise, a)


def gaussian_perturb(
    X: DataMatrix, budget: PrivacyBudget, rng: RngStream, scaling: str = "mean"
) -> MechanismReport:
    """(epsilon, delta) comparison baseline with symmetric Gaussian noise.

    Mirrors an upper triangle of i.i.d. N(0, sigma^2) entries like the
    Laplace mechanism.  Baseline only: excluded from the pure-DP audits.
    """
    if budget.delta == 0.0:
        raise ValueError("the Gaussian baseline needs delta > 0")
    _check_scaling(scaling)
    a = covariance(X, scaling)
    sigma = gaussian_noise_sigma(X.count, budget.epsilon, budget.delta, scaling)
    noise = sample_symmetric_gaussian_matrix(rng, X.dim, sigma)
    return _report("gaussian", X, budget, rng, scaling, a + noise, a)


def choose_mechanism(max_l11: float, max_nuclear: float, d: int) -> str:
    """Pick the better pure-DP noise family from the sensitivity profile.

    Returns ``"wishart"`` iff the ratio of the worst-case l1,1 change to the
    worst-case nuclear-norm change strictly exceeds sqrt(d) * ln(d);
    otherwise ``"laplace"``.  Natural log; ties break to Laplace.
    """
    if not max_l11 > 0 or not max_nuclear > 0:
        raise ValueError("both sensitivities must be positive")
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    threshold = math.sqrt(d) * math.log(d)
    return "wishart" if max_l11 / max_nuclear > threshold else "laplace"
