"""Seedable random streams and exact samplers for the noise distributions.

A :class:`RngStream` is identified by a ``(seed, stream_id)`` pair mapped to a
Philox counter-based generator, so distinct stream ids from one seed give
statistically independent, non-overlapping sequences and Monte Carlo trials
can be fanned out across stream ids with no coordination.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .matrix import SymmetricMatrix

__all__ = [
    "RngStream",
    "WishartParams",
    "sample_laplace",
    "sample_gaussian",
    "sample_gamma",
    "sample_chi_square",
    "sample_symmetric_laplace_matrix",
    "sample_symmetric_gaussian_matrix",
    "sample_wishart",
    "sample_wishart_general",
]

_MASK64 = (1 << 64) - 1


@dataclass
class RngStream:
    """A single-owner random stream addressed by (seed, stream_id).

    The same pair always replays the identical sample sequence.  The pair is
    packed into the 128-bit Philox key, so every (seed, stream_id) selects a
    distinct counter-based sequence.
    """

    seed: int
    stream_id: int = 0
    _gen: np.random.Generator = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        key = (self.seed & _MASK64) | ((self.stream_id & _MASK64) << 64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    @property
    def generator(self) -> np.random.Generator:
        return self._gen

    def offset(self, delta: int) -> "RngStream":
        """Fresh stream at ``stream_id + delta`` (mod 2^64), same seed.

        Trial-parallel audits give trial t the stream ``offset(t)``, keeping
        results independent of execution order.
        """
        return RngStream(self.seed, (self.stream_id + delta) & _MASK64)


@dataclass(frozen=True)
class WishartParams:
    """Parameters of W_d(m, C) with isotropic scale C = c * I_d."""

    dim: int
    dof: float
    scale_eigenvalue: float

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if not self.dof > self.dim - 1:
            raise ValueError(f"dof must exceed dim - 1 = {self.dim - 1}, got {self.dof}")
        if not self.scale_eigenvalue > 0:
            raise ValueError(f"scale_eigenvalue must be positive, got {self.scale_eigenvalue}")

    @property
    def scale_trace_ratio(self) -> float:
        """tr(C)/||C||_2, which equals d for an isotropic scale matrix."""
        return float(self.dim)


def sample_laplace(rng: RngStream, scale: float, size=None):
    """Zero-mean Laplace draw(s) with the given scale, via the inverse CDF
    ``scale * sign(u) * log(1 - 2|u|)`` for u uniform on (-1/2, 1/2).
    """
    if not scale > 0:
        raise ValueError(f"scale must be positive, got {scale}")
    u = rng.generator.uniform(-0.5, 0.5, size=size)
    # the open interval excludes |u| = 1/2; clamp the measure-zero endpoint
    u = np.clip(u, -0.5 + 2.0**-55, 0.5 - 2.0**-55)
    out = scale * np.sign(u) * np.log1p(-2.0 * np.abs(u))
    return float(out) if size is None else out


def sample_gaussian(rng: RngStream, sigma: float, size=None):
    """Zero-mean Gaussian draw(s) with standard deviation sigma (>= 0)."""
    if sigma < 0:
        raise ValueError(f"sigma must be non-negative, got {sigma}")
    z = rng.generator.standard_normal(size=size)
    out = sigma * z
    return float(out) if size is None else out


def sample_gamma(rng: RngStream, shape, scale: float, size=None):
    """Gamma draw(s) with the given shape and scale.

    Backed by the generator's Marsaglia-Tsang squeeze sampler, including the
    boost for shape < 1; accepts an array of shapes for batched draws.
    """
    if not np.all(np.asarray(shape) > 0):
        raise ValueError(f"shape must be positive, got {shape}")
    if not scale > 0:
        raise ValueError(f"scale must be positive, got {scale}")
    out = rng.generator.gamma(shape, scale, size=size)
    return float(out) if size is None and np.ndim(shape) == 0 else out


def sample_chi_square(rng: RngStream, dof, size=None):
    """Chi-square draw(s) as Gamma(dof/2, 2); dof may be non-integer."""
    return sample_gamma(rng, np.asarray(dof) / 2.0, 2.0, size=size)


def _mirrored(draws: np.ndarray, d: int) -> SymmetricMatrix:
    iu = np.triu_indices(d)
    m = np.zeros((d, d))
    m[iu] = draws
    return SymmetricMatrix(m)


def sample_symmetric_laplace_matrix(rng: RngStream, d: int, scale: float) -> SymmetricMatrix:
    """Symmetric matrix with (d^2+d)/2 i.i.d. Laplace(0, scale) entries in the
    upper triangle, mirrored into the lower triangle."""
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    draws = sample_laplace(rng, scale, size=d * (d + 1) // 2)
    return _mirrored(draws, d)


def sample_symmetric_gaussian_matrix(rng: RngStream, d: int, sigma: float) -> SymmetricMatrix:
    """Symmetric matrix with i.i.d. N(0, sigma^2) upper-triangle entries,
    mirrored like the Laplace matrix."""
    if d < 1:
        raise ValueError(f"d must be >= 1, got {d}")
    draws = sample_gaussian(rng, sigma, size=d * (d + 1) // 2)
    return _mirrored(draws, d)


def _bartlett_factor(rng: RngStream, d: int, m: float) -> np.ndarray:
    """Lower-triangular Bartlett factor T with T_ii = sqrt(chi^2_{m-i+1}) and
    standard normal strict lower triangle, so that T T^T ~ W_d(m, I)."""
    t = np.zeros((d, d))
    dofs = m - np.arange(d, dtype=np.float64)
    t[np.diag_indices(d)] = np.sqrt(sample_chi_square(rng, dofs, size=d))
    il = np.tril_indices(d, -1)
    if il[0].size:
        t[il] = rng.generator.standard_normal(il[0].size)
    return t


def sample_wishart(rng: RngStream, params: WishartParams) -> SymmetricMatrix:
    """Wishart draw W ~ W_d(m, c * I) by the Bartlett decomposition.

    For the isotropic scale the Cholesky factor of C is sqrt(c) * I, so the
    draw is c * T T^T.  The result is symmetric positive semidefinite up to
    rounding (positive definite almost surely).
    """
    t = _bartlett_factor(rng, params.dim, params.dof)
    return SymmetricMatrix(params.scale_eigenvalue * (t @ t.T))


def sample_wishart_general(rng: RngStream, dof: float, scale: SymmetricMatrix) -> SymmetricMatrix:
    """Wishart draw with a general positive definite scale matrix C.

    Uses the Cholesky factor L of C: W = (L T)(L T)^T.  Provided for
    extensibility; the mechanisms only need the isotropic path.
    """
    d = scale.dim
    if not dof > d - 1:
        raise ValueError(f"dof must exceed dim - 1 = {d - 1}, got {dof}")
    try:
        chol = np.linalg.cholesky(scale.to_array())
    except np.linalg.LinAlgError as exc:
        raise ValueError("scale matrix must be positive definite") from exc
    lt = chol @ _bartlett_factor(rng, d, dof)
    return SymmetricMatrix(lt @ lt.T)
