"""Monte Carlo audits of the privacy guarantees.

Every proof step behind the pure-DP claim is re-checked numerically:
the rank and nuclear norm of the covariance difference over adjacent
datasets, the Wishart density ratio (a pure trace term once the degrees of
freedom are d+1), the l1-sensitivity bracket by brute-force grid search,
and the Wishart spectral tail bound.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .matrix import SymmetricMatrix, eig_sym, nuclear_norm
from .mechanisms import DataMatrix, wishart_scale_eigenvalue
from .sampling import RngStream, WishartParams, sample_wishart

__all__ = [
    "AdjacentPair",
    "TailBoundParams",
    "SupportViolation",
    "PrivacyAuditReport",
    "L1SensitivityBracket",
    "TailBoundReport",
    "make_adjacent_pair",
    "sample_adjacent_columns",
    "sample_adjacent_pair",
    "column_delta",
    "delta_matrix",
    "nuclear_sensitivity_check",
    "nuclear_grid_search_2d",
    "density_log_ratio",
    "privacy_ratio_audit",
    "l1_sensitivity_bracket",
    "tail_bound_audit",
]

RATIO_SLACK = 1e-9


class SupportViolation(Exception):
    """A density ratio was requested at a point outside the Wishart support."""

    def __init__(self, message: str, min_eigenvalue: float):
        super().__init__(message)
        self.min_eigenvalue = min_eigenvalue


@dataclass(frozen=True)
class AdjacentPair:
    """Two datasets identical except for one replaced column.

    ``v`` and ``v_hat`` are the differing columns at ``index``; both lie in
    the unit l2 ball (enforced by DataMatrix).
    """

    X: DataMatrix
    X_hat: DataMatrix
    index: int
    v: np.ndarray
    v_hat: np.ndarray

    def __post_init__(self):
        if self.X.dim != self.X_hat.dim or self.X.count != self.X_hat.count:
            raise ValueError("adjacent datasets must have identical shape")
        if not 0 <= self.index < self.X.count:
            raise ValueError(f"index {self.index} out of range for n = {self.X.count}")
        a, b = self.X.points, self.X_hat.points
        mask = np.ones(self.X.count, dtype=bool)
        mask[self.index] = False
        if not np.array_equal(a[:, mask], b[:, mask]):
            raise ValueError("datasets differ outside the replaced column")
        if not np.array_equal(a[:, self.index], self.v) or not np.array_equal(
            b[:, self.index], self.v_hat
        ):
            raise ValueError("v / v_hat do not match the stored columns")


def make_adjacent_pair(X: DataMatrix, index: int, v, v_hat) -> AdjacentPair:
    """Adjacent pair obtained by writing v and v_hat into column ``index``."""
    v = np.asarray(v, dtype=np.float64)
    v_hat = np.asarray(v_hat, dtype=np.float64)
    return AdjacentPair(X.with_column(index, v), X.with_column(index, v_hat), index, v, v_hat)


def _unit_vector(gen: np.random.Generator, d: int) -> np.ndarray:
    while True:
        z = gen.standard_normal(d)
        nrm = float(np.linalg.norm(z))
        if nrm > 0:
            return z / nrm


def sample_adjacent_columns(rng: RngStream, d: int) -> tuple[np.ndarray, np.ndarray]:
    """Draw a pair of differing columns from a three-regime mixture.

    Regimes: both uniform on the unit sphere, one column zero, and
    near-antipodal pairs; together they stress the nuclear-norm bound near
    its extremes (orthogonal unit pairs approach the attained maximum of 2).
    """
    gen = rng.generator
    regime = int(gen.integers(3))
    v = _unit_vector(gen, d)
    if regime == 0:
        v_hat = _unit_vector(gen, d)
    elif regime == 1:
        v_hat = np.zeros(d)
    else:
        v_hat = -(v + 0.05 * gen.standard_normal(d))
        nrm = float(np.linalg.norm(v_hat))
        if nrm > 1.0:
            v_hat = v_hat / nrm
    return v, v_hat


def _sub_unit_background(gen: np.random.Generator, d: int, n: int) -> np.ndarray:
    """Background columns uniform in the unit ball."""
    cols = gen.standard_normal((d, n))
    cols /= np.maximum(np.linalg.norm(cols, axis=0), 1e-300)
    cols *= gen.random(n) ** (1.0 / d)
    return cols


def sample_adjacent_pair(rng: RngStream, d: int, n: int) -> AdjacentPair:
    """Random adjacent pair: shared sub-unit background columns plus a
    differing column drawn from the three-regime mixture at index 0."""
    gen = rng.generator
    background = _sub_unit_background(gen, d, n)
    v, v_hat = sample_adjacent_columns(rng, d)
    X = DataMatrix(background).with_column(0, v)
    return AdjacentPair(X, X.with_column(0, v_hat), 0, v, v_hat)


def column_delta(v, v_hat, n: int, scaling: str = "mean") -> SymmetricMatrix:
    """Covariance difference (v v^T - v_hat v_hat^T) / n induced by replacing
    one column (the shared columns cancel); unscaled under ``gram``."""
    v = np.asarray(v, dtype=np.float64)
    v_hat = np.asarray(v_hat, dtype=np.float64)
    delta = np.outer(v, v) - np.outer(v_hat, v_hat)
    if scaling == "mean":
        delta = delta / n
    elif scaling != "gram":
        raise ValueError(f"scaling must be 'mean' or 'gram', got {scaling!r}")
    return SymmetricMatrix(delta)


def delta_matrix(pair: AdjacentPair, scaling: str = "mean") -> SymmetricMatrix:
    """Difference of the published covariances of an adjacent pair; rank <= 2."""
    return column_delta(pair.v, pair.v_hat, pair.X.count, scaling)


def nuclear_sensitivity_check(trials: int, d: int, n: int, rng: RngStream) -> float:
    """Max observed n * ||Delta||_* over random adjacent column pairs.

    The proven ceiling is 3; orthogonal unit pairs attain 2, which is the
    supremum actually reachable (triangle inequality caps the nuclear norm of
    a difference of two unit-ball Gram terms at 2).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    worst = 0.0
    for t in range(trials):
        v, v_hat = sample_adjacent_columns(rng.offset(t), d)
        value = n * nuclear_norm(column_delta(v, v_hat, n, "mean"))
        if value > worst:
            worst = value
    return worst


def _pair_nuclear(a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Nuclear norm of v v^T - w w^T from a = ||v||^2, b = ||w||^2,
    c = <v, w>: the two nonzero eigenvalues are
    ((a-b) +- sqrt((a+b)^2 - 4 c^2)) / 2."""
    disc = np.sqrt(np.maximum((a + b) ** 2 - 4.0 * c**2, 0.0))
    lo = 0.5 * ((a - b) - disc)
    hi = 0.5 * ((a - b) + disc)
    return np.abs(lo) + np.abs(hi)


def nuclear_grid_search_2d(angular_step: float = 0.01) -> float:
    """Independent grid oracle for the d = 2 nuclear sensitivity: sweeps both
    columns over the angle grid at radius 0 or 1 (the objective is convex in
    each squared radius, so endpoints suffice) plus the canonical axis pair.
    """
    if not angular_step > 0:
        raise ValueError("angular_step must be positive")
    angles = np.arange(0.0, 2.0 * math.pi, angular_step)
    pts = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    pts = np.vstack([pts, [[1.0, 0.0], [0.0, 1.0]]])  # canonical seeds
    sq = (pts**2).sum(axis=1)
    inner = pts @ pts.T
    best = float(_pair_nuclear(sq[:, None], sq[None, :], inner).max())
    # radius-zero partner: nuclear norm is just ||v||^2
    best = max(best, float(sq.max()))
    return best


def density_log_ratio(W0: SymmetricMatrix, delta: SymmetricMatrix, c: float) -> float:
    """Exact log density ratio log[p(W0) / p(W0 + delta)] for W ~ W_d(d+1, cI).

    With the degrees of freedom at d+1 the determinant exponent vanishes and
    the ratio is tr(C^{-1} delta) / 2 = tr(delta) / (2c), independent of W0.
    Both W0 and W0 + delta must be inside the support (positive definite);
    otherwise :class:`SupportViolation` is raised for the auditor to count.
    """
    if not c > 0:
        raise ValueError(f"scale eigenvalue must be positive, got {c}")
    lam_w0 = float(eig_sym(W0).eigenvalues[-1])
    if lam_w0 <= 0.0:
        raise SupportViolation("W0 is not positive definite", lam_w0)
    lam_shifted = float(eig_sym(W0 + delta).eigenvalues[-1])
    if lam_shifted <= 0.0:
        raise SupportViolation("W0 + delta is not positive definite", lam_shifted)
    return delta.trace() / (2.0 * c)


@dataclass
class PrivacyAuditReport:
    """Outcome of a privacy-ratio audit over random adjacent pairs."""

    d: int
    n: int
    epsilon: float
    trials: int
    scale_eigenvalue: float
    max_abs_log_ratio: float
    max_von_neumann_bound: float
    max_ratio_excess_over_bound: float
    support_violations: int
    passed: bool
    worst_pair: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "check": "privacy",
            "passed": self.passed,
            "d": self.d,
            "n": self.n,
            "epsilon": self.epsilon,
            "trials": self.trials,
            "scale_eigenvalue": self.scale_eigenvalue,
            "max_abs_log_ratio": self.max_abs_log_ratio,
            "max_von_neumann_bound": self.max_von_neumann_bound,
            "max_ratio_excess_over_bound": (
                self.max_ratio_excess_over_bound
                if math.isfinite(self.max_ratio_excess_over_bound)
                else None
            ),
            "bound": self.epsilon,
            "support_violations": self.support_violations,
            "worst_pair": self.worst_pair,
        }


def privacy_ratio_audit(
    trials: int, d: int, n: int, epsilon: float, rng: RngStream
) -> PrivacyAuditReport:
    """Check the pure-DP guarantee of the Wishart mechanism empirically.

    Per trial: draw an adjacent column pair and a fresh Wishart matrix W0,
    evaluate the exact log density ratio and the looser Von Neumann bound
    ||C^{-1}||_2 ||Delta||_* / 2 with ||C^{-1}||_2 = 2 n epsilon / 3.  Both
    maxima must stay at or below epsilon.  Support violations (W0 + Delta
    leaving the positive definite cone) are counted, never dropped.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    c = wishart_scale_eigenvalue(n, epsilon, "mean")
    c_inv_norm = 2.0 * n * epsilon / 3.0
    params = WishartParams(d, d + 1, c)

    max_ratio = 0.0
    max_vn = 0.0
    max_excess = -math.inf
    violations = 0
    worst: dict = {}
    for t in range(trials):
        sub = rng.offset(t)
        v, v_hat = sample_adjacent_columns(sub, d)
        delta = column_delta(v, v_hat, n, "mean")
        vn = 0.5 * c_inv_norm * nuclear_norm(delta)
        if vn > max_vn:
            max_vn = vn
        w0 = sample_wishart(sub, params)
        try:
            ratio = abs(density_log_ratio(w0, delta, c))
        except SupportViolation:
            violations += 1
            continue
        max_excess = max(max_excess, ratio - vn)
        if ratio > max_ratio:
            max_ratio = ratio
            worst = {
                "trial": t,
                "index": 0,
                "v": [float(x) for x in v],
                "v_hat": [float(x) for x in v_hat],
                "abs_log_ratio": ratio,
            }
    passed = max_ratio <= epsilon + RATIO_SLACK and max_vn <= epsilon + RATIO_SLACK
    return PrivacyAuditReport(
        d=d,
        n=n,
        epsilon=epsilon,
        trials=trials,
        scale_eigenvalue=c,
        max_abs_log_ratio=max_ratio,
        max_von_neumann_bound=max_vn,
        max_ratio_excess_over_bound=max_excess,
        support_violations=violations,
        passed=passed,
        worst_pair=worst,
    )


def _sphere_grid(d: int, step: float) -> np.ndarray:
    """Angular grid on the unit sphere in R^d (d in {2, 3, 4})."""
    if d == 2:
        a = np.arange(0.0, 2.0 * math.pi, step)
        return np.stack([np.cos(a), np.sin(a)], axis=1)
    if d == 3:
        th = np.arange(step / 2.0, math.pi, step)
        ph = np.arange(0.0, 2.0 * math.pi, step)
        t, p = np.meshgrid(th, ph, indexing="ij")
        return np.stack(
            [np.sin(t) * np.cos(p), np.sin(t) * np.sin(p), np.cos(t)], axis=-1
        ).reshape(-1, 3)
    if d == 4:
        t1 = np.arange(step / 2.0, math.pi, step)
        t2 = np.arange(step / 2.0, math.pi, step)
        ph = np.arange(0.0, 2.0 * math.pi, step)
        a, b, p = np.meshgrid(t1, t2, ph, indexing="ij")
        return np.stack(
            [
                np.cos(a),
                np.sin(a) * np.cos(b),
                np.sin(a) * np.sin(b) * np.cos(p),
                np.sin(a) * np.sin(b) * np.sin(p),
            ],
            axis=-1,
        ).reshape(-1, 4)
    raise ValueError(f"sphere grid implemented for d in {{2, 3, 4}}, got {d}")


_DEFAULT_L1_STEP = {2: 0.01, 3: 0.05, 4: 0.2}


@dataclass
class L1SensitivityBracket:
    """Grid estimate of the l1 sensitivity of the covariance map, bracketed
    by the proven bounds d/n (strict lower) and 2d/n (strict upper)."""

    d: int
    n: int
    resolution: float
    lower_estimate: float
    upper_estimate: float
    lemma_lower: float
    lemma_upper: float
    construction_value: float
    grid_points: int

    def to_dict(self) -> dict:
        return {
            "check": "l1",
            "passed": self.lemma_lower < self.lower_estimate < self.lemma_upper,
            "d": self.d,
            "n": self.n,
            "resolution": self.resolution,
            "lower_estimate": self.lower_estimate,
            "upper_estimate": self.upper_estimate,
            "lemma_lower": self.lemma_lower,
            "lemma_upper": self.lemma_upper,
            "construction_value": self.construction_value,
            "grid_points": self.grid_points,
        }


def _l11_objective_max(P: np.ndarray, Q: np.ndarray, chunk: int = 96) -> float:
    """max over (p, q) from P x Q of sum_ij |p_i p_j - q_i q_j|."""
    qq = Q[:, :, None] * Q[:, None, :]
    best = 0.0
    for i0 in range(0, P.shape[0], chunk):
        pi = P[i0 : i0 + chunk]
        pp = pi[:, :, None] * pi[:, None, :]
        vals = np.abs(pp[:, None, :, :] - qq[None, :, :, :]).sum(axis=(2, 3))
        m = float(vals.max())
        if m > best:
            best = m
    return best


def l1_sensitivity_bracket(
    d: int, n: int, grid_resolution: float | None = None
) -> L1SensitivityBracket:
    """Brute-force maximization of (1/n) sum_ij |p_i p_j - q_i q_j| over the
    gridded unit ball (d <= 4).

    The objective is convex in each squared radius at fixed directions, so
    the search only needs the sphere and the origin; the canonical
    construction p = (1/sqrt(d)) * ones, q = 0 is seeded explicitly and
    evaluates to exactly d/n.
    """
    if not 2 <= d <= 4:
        raise ValueError(f"the combinatorial oracle supports 2 <= d <= 4, got {d}")
    if n < 1:
        raise ValueError("n must be >= 1")
    step = _DEFAULT_L1_STEP[d] if grid_resolution is None else float(grid_resolution)
    if not step > 0:
        raise ValueError("grid_resolution must be positive")
    pts = _sphere_grid(d, step)
    seeds = np.vstack([np.eye(d), -np.eye(d), np.full((1, d), 1.0 / math.sqrt(d))])
    pts = np.vstack([pts, seeds])

    # p = ones/sqrt(d), q = 0: every entry of p p^T is 1/d by construction,
    # so the objective is d^2 * (1/d) = d, evaluated here in closed form
    construction = float(d)
    best = _l11_objective_max(pts, pts)
    # q = 0 partner: objective is ||p||_1^2
    best = max(best, float((np.abs(pts).sum(axis=1) ** 2).max()), construction)
    return L1SensitivityBracket(
        d=d,
        n=n,
        resolution=step,
        lower_estimate=best / n,
        upper_estimate=2.0 * d / n,
        lemma_lower=d / n,
        lemma_upper=2.0 * d / n,
        construction_value=construction / n,
        grid_points=pts.shape[0],
    )


@dataclass(frozen=True)
class TailBoundParams:
    """Parameters of the Wishart spectral tail bound.

    The bound: lambda_1(W) exceeds (m + sqrt(2 m theta (r+2)) + 2 theta r)
    * lambda_1(C) with probability at most d * exp(-theta), where
    r = tr(C)/||C||_2 = d for the isotropic scale used here.
    """

    dim: int
    dof: float
    scale_eigenvalue: float
    theta: float

    def __post_init__(self):
        if self.theta < 0:
            raise ValueError(f"theta must be >= 0, got {self.theta}")
        if not self.dof > self.dim - 1:
            raise ValueError(f"dof must exceed dim - 1 = {self.dim - 1}, got {self.dof}")
        if not self.scale_eigenvalue > 0:
            raise ValueError("scale_eigenvalue must be positive")

    @property
    def r(self) -> float:
        return float(self.dim)

    @property
    def threshold(self) -> float:
        m, th, r = self.dof, self.theta, self.r
        return (m + math.sqrt(2.0 * m * th * (r + 2.0)) + 2.0 * th * r) * self.scale_eigenvalue

    @property
    def bound_probability(self) -> float:
        return min(1.0, self.dim * math.exp(-self.theta))


@dataclass
class TailBoundReport:
    params: TailBoundParams
    trials: int
    exceedances: int
    frequency: float
    bound_probability: float
    threshold: float
    passed: bool

    def to_dict(self) -> dict:
        return {
            "check": "tail",
            "passed": self.passed,
            "d": self.params.dim,
            "dof": self.params.dof,
            "scale_eigenvalue": self.params.scale_eigenvalue,
            "theta": self.params.theta,
            "trials": self.trials,
            "exceedances": self.exceedances,
            "frequency": self.frequency,
            "bound": self.bound_probability,
            "threshold": self.threshold,
        }


def tail_bound_audit(params: TailBoundParams, trials: int, rng: RngStream) -> TailBoundReport:
    """Estimate the exceedance frequency of the Wishart tail bound.

    Passes when the empirical frequency stays within three binomial standard
    errors of the proven ceiling d * exp(-theta).  theta = 0 makes the
    ceiling >= 1, so the audit passes vacuously there.
    """
    if trials < 1000:
        raise ValueError(f"tail audit needs at least 10^3 trials, got {trials}")
    wp = WishartParams(params.dim, params.dof, params.scale_eigenvalue)
    threshold = params.threshold
    exceed = 0
    for t in range(trials):
        w = sample_wishart(rng.offset(t), wp)
        lam1 = float(eig_sym(w).eigenvalues[0])
        if lam1 >= threshold:
            exceed += 1
    freq = exceed / trials
    p = params.bound_probability
    se = math.sqrt(p * (1.0 - p) / trials)
    return TailBoundReport(
        params=params,
        trials=trials,
        exceedances=exceed,
        frequency=freq,
        bound_probability=p,
        threshold=threshold,
        passed=freq <= p + 3.0 * se,
    )
