"""Monte Carlo instrumentation of the utility guarantees.

Covers top-k subspace extraction, the conditional projector-distance bound
(2 sqrt(k) ||W||_2 / gap when the spectral gap dominates the noise), the
sample-complexity formula for recovering the principal direction, and the
low-rank approximation error of the perturbed output.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .matrix import (
    Projector,
    SymmetricMatrix,
    eig_sym,
    frobenius_norm,
    rank_k_truncation,
    spectral_norm,
)
from .mechanisms import DataMatrix, covariance, wishart_scale_eigenvalue
from .sampling import RngStream, WishartParams, sample_wishart

__all__ = [
    "SubspaceClosenessResult",
    "CloseApproxParams",
    "CloseApproxReport",
    "LowRankErrorReport",
    "top_k_subspace",
    "projector_distance",
    "subspace_closeness_audit",
    "sample_complexity_bound",
    "close_approx_audit",
    "low_rank_error_audit",
    "axis_aligned_dataset",
    "spiked_dataset",
    "linear_regression_r2",
    "loglog_slope",
]

MIN_RHO = math.sqrt(2.0) / 2.0


def top_k_subspace(A: SymmetricMatrix, k: int) -> Projector:
    """Projector V_k V_k^T onto the span of the top-k eigenvectors."""
    if not 1 <= k <= A.dim:
        raise ValueError(f"k must satisfy 1 <= k <= {A.dim}, got {k}")
    vk = eig_sym(A).top_vectors(k)
    return Projector(A.dim, k, SymmetricMatrix(vk @ vk.T))


def projector_distance(P: Projector, Q: Projector) -> tuple[float, float]:
    """(Frobenius, spectral) distance between two projectors; sign- and
    basis-invariant, symmetric in its arguments."""
    if P.dim != Q.dim:
        raise ValueError(f"dimension mismatch: {P.dim} vs {Q.dim}")
    diff = P.matrix - Q.matrix
    return frobenius_norm(diff), spectral_norm(diff)


@dataclass(frozen=True)
class SubspaceClosenessResult:
    """One trial of the top-k subspace perturbation check."""

    k: int
    gap: float
    noise_norm: float
    projector_distance_F: float
    bound: float
    gap_condition_met: bool


def subspace_closeness_audit(
    X: DataMatrix,
    k: int,
    epsilon: float,
    trials: int,
    rng: RngStream,
    scaling: str = "mean",
) -> list[SubspaceClosenessResult]:
    """Per-trial check of the conditional subspace bound.

    For each Wishart draw W: when the spectral gap sigma_k - sigma_{k+1} of
    the clean covariance is at least 2 ||W||_2, the Frobenius distance of the
    top-k projectors of A and A + W must not exceed
    2 sqrt(k) ||W||_2 / gap.  Trials failing the gap condition are reported
    with the flag down and are not bounded by the theorem.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    a = covariance(X, scaling)
    if not 1 <= k < a.dim:
        raise ValueError(f"subspace closeness needs 1 <= k < d = {a.dim}, got {k}")
    decomp = eig_sym(a)
    gap = float(decomp.eigenvalues[k - 1] - decomp.eigenvalues[k])
    p_clean = top_k_subspace(a, k)
    c = wishart_scale_eigenvalue(X.count, epsilon, scaling)
    params = WishartParams(a.dim, a.dim + 1, c)

    results = []
    for t in range(trials):
        w = sample_wishart(rng.offset(t), params)
        noise = spectral_norm(w)
        p_noisy = top_k_subspace(a + w, k)
        dist_f, _ = projector_distance(p_clean, p_noisy)
        bound = 2.0 * math.sqrt(k) * noise / gap if gap > 0 else math.inf
        results.append(
            SubspaceClosenessResult(
                k=k,
                gap=gap,
                noise_norm=noise,
                projector_distance_F=dist_f,
                bound=bound,
                gap_condition_met=gap >= 2.0 * noise,
            )
        )
    return results


@dataclass(frozen=True)
class CloseApproxParams:
    """Target alignment rho, failure budget eta, and the top spectral gap."""

    rho: float
    eta: float
    spectrum_gap: float

    def __post_init__(self):
        if not MIN_RHO <= self.rho < 1.0:
            raise ValueError(f"rho must lie in [sqrt(2)/2, 1), got {self.rho}")
        if not 0.0 < self.eta < 1.0:
            raise ValueError(f"eta must lie in (0, 1), got {self.eta}")
        if not self.spectrum_gap > 0:
            raise ValueError(f"spectrum gap must be positive, got {self.spectrum_gap}")


def sample_complexity_bound(d: int, epsilon: float, params: CloseApproxParams) -> float:
    """Samples sufficient for the Wishart mechanism to align with the top
    eigenvector: inner product at least rho with probability at least 1-eta.

    n* = 3 (d+1 + sqrt(2 (d+1)(d+2) ln(d/eta)) + 2 d ln(d/eta))
         / (2 epsilon (1 - rho^2) (lambda_1 - lambda_2)).
    Monotone decreasing in epsilon and in the gap.
    """
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    log_term = math.log(d / params.eta)
    numerator = 3.0 * (
        d + 1.0 + math.sqrt(2.0 * (d + 1.0) * (d + 2.0) * log_term) + 2.0 * d * log_term
    )
    denominator = 2.0 * epsilon * (1.0 - params.rho**2) * params.spectrum_gap
    return numerator / denominator


def axis_aligned_dataset(fractions, n: int) -> DataMatrix:
    """Unit columns along the coordinate axes in the given proportions.

    The realized covariance is exactly diag(count_i / n), so the spectrum is
    known in closed form.  Remainder columns after flooring go to the largest
    fractions first.
    """
    fr = np.asarray(fractions, dtype=np.float64)
    if fr.ndim != 1 or fr.size < 1 or np.any(fr < 0):
        raise ValueError("fractions must be a non-negative vector")
    if abs(fr.sum() - 1.0) > 1e-9:
        raise ValueError(f"fractions must sum to 1, got {fr.sum()}")
    if n < fr.size:
        raise ValueError(f"need n >= {fr.size} columns, got {n}")
    counts = np.floor(fr * n).astype(int)
    remainder = n - counts.sum()
    order = np.argsort(-fr, kind="stable")
    for i in range(remainder):
        counts[order[i % fr.size]] += 1
    d = fr.size
    pts = np.zeros((d, n))
    pos = 0
    for axis, ct in enumerate(counts):
        pts[axis, pos : pos + ct] = 1.0
        pos += ct
    return DataMatrix(pts)


def spiked_dataset(d: int, n: int, gap: float) -> DataMatrix:
    """Dataset whose covariance is diag(f, 1-f, 0, ...) with a top spectral
    gap of at least ``gap`` (unit columns split across the first two axes)."""
    if d < 2:
        raise ValueError("spiked dataset needs d >= 2")
    if not 0.0 < gap < 1.0:
        raise ValueError(f"gap must lie in (0, 1), got {gap}")
    n1 = math.ceil(n * (1.0 + gap) / 2.0)
    if n1 >= n:
        n1 = n - 1
    pts = np.zeros((d, n))
    pts[0, :n1] = 1.0
    pts[1, n1:] = 1.0
    return DataMatrix(pts)


@dataclass
class CloseApproxReport:
    d: int
    epsilon: float
    rho: float
    eta: float
    gap_target: float
    gap_realized: float
    n: int
    n_star: float
    trials: int
    successes: int
    rate: float
    required_rate: float
    meets_sample_bound: bool
    passed: bool

    def to_dict(self) -> dict:
        return {
            "check": "close-approx",
            "passed": self.passed,
            "d": self.d,
            "epsilon": self.epsilon,
            "rho": self.rho,
            "eta": self.eta,
            "gap_target": self.gap_target,
            "gap_realized": self.gap_realized,
            "n": self.n,
            "n_star": self.n_star,
            "trials": self.trials,
            "successes": self.successes,
            "rate": self.rate,
            "required_rate": self.required_rate,
            "meets_sample_bound": self.meets_sample_bound,
        }


def close_approx_audit(
    d: int,
    epsilon: float,
    params: CloseApproxParams,
    trials: int,
    rng: RngStream,
    n: int | None = None,
) -> CloseApproxReport:
    """Empirical success rate of recovering the principal direction.

    Builds a synthetic dataset with the requested top gap, runs the Wishart
    mechanism per trial, and counts |<v1, v1_hat>| >= rho (absolute value:
    eigenvector signs are arbitrary, and the underlying argument controls the
    squared inner product).  When n >= n* the rate must reach
    1 - eta - 3 binomial SE; an undersampled run is recorded without any
    claim, since the guarantee has no converse.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    n_star = sample_complexity_bound(d, epsilon, params)
    if n is None:
        n = math.ceil(n_star)
    X = spiked_dataset(d, n, params.spectrum_gap)
    a = covariance(X, "mean")
    decomp = eig_sym(a)
    gap_realized = float(decomp.eigenvalues[0] - decomp.eigenvalues[1])
    v1 = decomp.eigenvectors[:, 0]
    c = wishart_scale_eigenvalue(n, epsilon, "mean")
    wparams = WishartParams(d, d + 1, c)

    successes = 0
    for t in range(trials):
        w = sample_wishart(rng.offset(t), wparams)
        v1_hat = eig_sym(a + w).eigenvectors[:, 0]
        if abs(float(v1 @ v1_hat)) >= params.rho:
            successes += 1
    rate = successes / trials
    se = math.sqrt(params.eta * (1.0 - params.eta) / trials)
    required = 1.0 - params.eta - 3.0 * se
    meets = n >= n_star
    return CloseApproxReport(
        d=d,
        epsilon=epsilon,
        rho=params.rho,
        eta=params.eta,
        gap_target=params.spectrum_gap,
        gap_realized=gap_realized,
        n=n,
        n_star=n_star,
        trials=trials,
        successes=successes,
        rate=rate,
        required_rate=required,
        meets_sample_bound=meets,
        passed=rate >= required if meets else True,
    )


@dataclass
class LowRankErrorReport:
    d: int
    k: int
    epsilon: float
    trials: int
    lambda_k_plus_1: float
    errors: list
    noise_norms: list
    bound_violations: int
    median_error: float
    median_excess: float

    def to_dict(self) -> dict:
        return {
            "check": "lowrank",
            "passed": self.bound_violations == 0,
            "d": self.d,
            "k": self.k,
            "epsilon": self.epsilon,
            "trials": self.trials,
            "lambda_k_plus_1": self.lambda_k_plus_1,
            "bound_violations": self.bound_violations,
            "median_error": self.median_error,
            "median_excess": self.median_excess,
        }


def low_rank_error_audit(
    X: DataMatrix, k: int, epsilon: float, trials: int, rng: RngStream
) -> LowRankErrorReport:
    """Check ||A - Ahat_k||_2 <= lambda_{k+1}(A) + 2 ||W||_2 per trial.

    Uses gram scaling (A = X X^T), where the Wishart scale is n-free; the
    noise floor then grows like d log d in the dimension sweep.
    lambda_{k+1} is read from the clean spectrum, taken as 0 when k = d.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    a = covariance(X, "gram")
    d = a.dim
    if not 1 <= k <= d:
        raise ValueError(f"k must satisfy 1 <= k <= {d}, got {k}")
    clean = eig_sym(a)
    lam_k1 = float(clean.eigenvalues[k]) if k < d else 0.0
    c = wishart_scale_eigenvalue(X.count, epsilon, "gram")
    params = WishartParams(d, d + 1, c)

    errors = []
    noises = []
    violations = 0
    for t in range(trials):
        w = sample_wishart(rng.offset(t), params)
        noise = spectral_norm(w)
        a_hat_k = rank_k_truncation(eig_sym(a + w), k)
        err = spectral_norm(a - a_hat_k)
        errors.append(err)
        noises.append(noise)
        if err > lam_k1 + 2.0 * noise + 1e-8:
            violations += 1
    errors_arr = np.array(errors)
    return LowRankErrorReport(
        d=d,
        k=k,
        epsilon=epsilon,
        trials=trials,
        lambda_k_plus_1=lam_k1,
        errors=errors,
        noise_norms=noises,
        bound_violations=violations,
        median_error=float(np.median(errors_arr)),
        median_excess=float(np.median(errors_arr - lam_k1)),
    )


def linear_regression_r2(x, y) -> tuple[float, float, float]:
    """Least-squares fit y = a x + b; returns (a, b, R^2)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.size != y.size or x.size < 2:
        raise ValueError("need at least two paired points")
    a, b = np.polyfit(x, y, 1)
    resid = y - (a * x + b)
    total = y - y.mean()
    r2 = 1.0 - float(resid @ resid) / float(total @ total)
    return float(a), float(b), r2


def loglog_slope(ds, values) -> float:
    """Slope of log(values) against log(ds); the growth exponent in d."""
    slope, _, _ = linear_regression_r2(np.log(np.asarray(ds, float)), np.log(np.asarray(values, float)))
    return slope
