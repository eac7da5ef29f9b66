"""Dense symmetric matrices: norms, a deterministic Jacobi eigensolver, and
rank-k truncation.

Everything downstream (noise matrices, covariances, perturbed outputs) lives
in :class:`SymmetricMatrix`, which mirrors the upper triangle into the lower
one at construction so that symmetry holds exactly, not just to rounding.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numba
import numpy as np

__all__ = [
    "SymmetricMatrix",
    "EigenDecomposition",
    "Projector",
    "NumericalError",
    "eig_sym",
    "spectral_norm",
    "nuclear_norm",
    "l11_norm",
    "frobenius_norm",
    "rank_k_truncation",
    "load_matrix",
    "save_matrix",
]

JACOBI_MAX_SWEEPS = 100
JACOBI_TOL_FACTOR = 1e-12
SYMMETRY_LOAD_TOL = 1e-12


class NumericalError(Exception):
    """A numerical routine failed to meet its convergence contract."""

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class SymmetricMatrix:
    """Immutable d x d symmetric matrix of 64-bit floats.

    Only the upper triangle of the input is read; the lower triangle is a
    bit-for-bit mirror of it, so ``entry(i, j) == entry(j, i)`` holds exactly
    for every pair of indices.
    """

    __slots__ = ("_a",)

    def __init__(self, entries, *, check_symmetry_tol: float | None = None):
        a = np.array(entries, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
            raise ValueError(f"expected a square d x d grid with d >= 1, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix entries must be finite")
        if check_symmetry_tol is not None:
            skew = float(np.abs(a - a.T).max())
            if skew > check_symmetry_tol:
                raise ValueError(
                    f"matrix is not symmetric: max |a_ij - a_ji| = {skew:g} "
                    f"exceeds tolerance {check_symmetry_tol:g}"
                )
        d = a.shape[0]
        iu = np.triu_indices(d)
        full = np.empty((d, d), dtype=np.float64)
        full[iu] = a[iu]
        full.T[iu] = a[iu]
        full.flags.writeable = False
        self._a = full

    @property
    def dim(self) -> int:
        return self._a.shape[0]

    def entry(self, i: int, j: int) -> float:
        return float(self._a[i, j])

    def to_array(self) -> np.ndarray:
        """Read-only dense view of the full square matrix."""
        return self._a

    def trace(self) -> float:
        return float(np.trace(self._a))

    def _binary(self, other: "SymmetricMatrix", op) -> "SymmetricMatrix":
        if not isinstance(other, SymmetricMatrix):
            return NotImplemented
        if other.dim != self.dim:
            raise ValueError(f"dimension mismatch: {self.dim} vs {other.dim}")
        return SymmetricMatrix(op(self._a, other._a))

    def __add__(self, other):
        return self._binary(other, np.add)

    def __sub__(self, other):
        return self._binary(other, np.subtract)

    def __mul__(self, scalar):
        return SymmetricMatrix(self._a * float(scalar))

    __rmul__ = __mul__

    def __neg__(self):
        return SymmetricMatrix(-self._a)

    def __repr__(self):
        return f"SymmetricMatrix(dim={self.dim})"


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues in descending order paired with orthonormal eigenvectors.

    ``eigenvectors[:, i]`` belongs to ``eigenvalues[i]``.  For repeated
    eigenvalues the individual columns are solver-dependent; compare
    projectors, not columns.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return self.eigenvalues.shape[0]

    def top_vectors(self, k: int) -> np.ndarray:
        """First k eigenvector columns (largest eigenvalues)."""
        return self.eigenvectors[:, :k]


@dataclass(frozen=True)
class Projector:
    """Orthogonal projector V_k V_k^T onto a k-dimensional invariant subspace."""

    dim: int
    rank: int
    matrix: SymmetricMatrix

    def __post_init__(self):
        p = self.matrix.to_array()
        idem = float(np.linalg.norm(p @ p - p))
        if idem > 1e-8:
            raise NumericalError(f"projector not idempotent: ||P^2 - P||_F = {idem:g}", idem)
        tr_err = abs(float(np.trace(p)) - self.rank)
        if tr_err > 1e-8:
            raise NumericalError(f"projector trace off by {tr_err:g} from rank {self.rank}", tr_err)


@numba.njit(cache=True)
def _jacobi_kernel(a, max_sweeps):  # pragma: no cover - exercised via eig_sym
    d = a.shape[0]
    v = np.eye(d)
    fro = 0.0
    for i in range(d):
        for j in range(d):
            fro += a[i, j] * a[i, j]
    fro = np.sqrt(fro)
    tol = JACOBI_TOL_FACTOR * fro

    off = 0.0
    for p in range(d - 1):
        for q in range(p + 1, d):
            off += 2.0 * a[p, q] * a[p, q]
    off = np.sqrt(off)

    sweeps = 0
    while off > tol and sweeps < max_sweeps:
        for p in range(d - 1):
            for q in range(p + 1, d):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = 0.5 * (a[q, q] - a[p, p]) / apq
                t = 1.0 / (abs(theta) + np.sqrt(1.0 + theta * theta))
                if theta < 0.0:
                    t = -t
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                for k in range(d):
                    akp = a[k, p]
                    akq = a[k, q]
                    a[k, p] = c * akp - s * akq
                    a[k, q] = s * akp + c * akq
                for k in range(d):
                    apk = a[p, k]
                    aqk = a[q, k]
                    a[p, k] = c * apk - s * aqk
                    a[q, k] = s * apk + c * aqk
                for k in range(d):
                    vkp = v[k, p]
                    vkq = v[k, q]
                    v[k, p] = c * vkp - s * vkq
                    v[k, q] = s * vkp + c * vkq
        sweeps += 1
        off = 0.0
        for p in range(d - 1):
            for q in range(p + 1, d):
                off += 2.0 * a[p, q] * a[p, q]
        off = np.sqrt(off)

    diag = np.empty(d)
    for i in range(d):
        diag[i] = a[i, i]
    return diag, v, off, tol, sweeps


def eig_sym(A: SymmetricMatrix, *, max_sweeps: int = JACOBI_MAX_SWEEPS) -> EigenDecomposition:
    """Full eigendecomposition by cyclic Jacobi rotations.

    Sweeps the strict upper triangle in row-major order, annihilating each
    off-diagonal entry with a Givens rotation, until the off-diagonal
    Frobenius mass drops below ``1e-12 * ||A||_F``.  Deterministic for a
    fixed input.  Raises :class:`NumericalError` (carrying the residual) if
    the sweep cap is exhausted first.
    """
    work = A.to_array().copy()
    diag, v, off, tol, sweeps = _jacobi_kernel(work, max_sweeps)
    if off > tol:
        raise NumericalError(
            f"Jacobi eigensolver did not converge in {max_sweeps} sweeps: "
            f"off-diagonal residual {off:g} > {tol:g}",
            off,
        )
    order = np.argsort(-diag, kind="stable")
    values = diag[order]
    vectors = v[:, order]
    values.flags.writeable = False
    vectors.flags.writeable = False
    return EigenDecomposition(values, vectors)


def spectral_norm(A: SymmetricMatrix) -> float:
    """Largest singular value; equals max |eigenvalue| for symmetric input."""
    values = eig_sym(A).eigenvalues
    return float(np.abs(values).max())


def nuclear_norm(A: SymmetricMatrix) -> float:
    """Sum of singular values, i.e. sum of |eigenvalue| for symmetric input."""
    values = eig_sym(A).eigenvalues
    return float(np.abs(values).sum())


def l11_norm(A: SymmetricMatrix) -> float:
    """Entrywise absolute sum."""
    return float(np.abs(A.to_array()).sum())


def frobenius_norm(A: SymmetricMatrix) -> float:
    """Square root of the entrywise sum of squares."""
    return float(np.sqrt((A.to_array() ** 2).sum()))


def rank_k_truncation(E: EigenDecomposition, k: int) -> SymmetricMatrix:
    """Best rank-k approximation V_k L_k V_k^T, keeping the k algebraically
    largest eigenvalues.

    For positive semidefinite input the algebraically largest eigenvalues are
    also the largest in magnitude, so this is the spectral-error-optimal
    choice.  On indefinite input the signed ordering can differ from the
    magnitude ordering; callers that care should inspect the spectrum
    (see ``cli``'s indefinite flag).
    """
    d = E.dim
    if not 1 <= k <= d:
        raise ValueError(f"k must satisfy 1 <= k <= {d}, got {k}")
    vk = E.eigenvectors[:, :k]
    lk = E.eigenvalues[:k]
    return SymmetricMatrix((vk * lk) @ vk.T)


def save_matrix(A: SymmetricMatrix, path) -> None:
    """Write the matrix text format: a line with d, then d rows of d floats.

    Floats are rendered with shortest round-trip precision so that a
    load/save cycle is byte-stable.
    """
    lines = [str(A.dim)]
    for row in A.to_array():
        lines.append(" ".join(repr(float(x)) for x in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="ascii")


def load_matrix(path) -> SymmetricMatrix:
    """Read the matrix text format written by :func:`save_matrix`.

    The full square is validated to be symmetric within 1e-12 and then
    exactly symmetrized (upper triangle wins).
    """
    text = Path(path).read_text(encoding="ascii")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty matrix file")
    try:
        d = int(lines[0].strip())
    except ValueError as exc:
        raise ValueError(f"{path}: first line must be the dimension, got {lines[0]!r}") from exc
    if d < 1:
        raise ValueError(f"{path}: dimension must be >= 1, got {d}")
    if len(lines) != d + 1:
        raise ValueError(f"{path}: expected {d} data rows, found {len(lines) - 1}")
    rows = []
    for i, line in enumerate(lines[1:]):
        parts = line.split()
        if len(parts) != d:
            raise ValueError(f"{path}: row {i} has {len(parts)} entries, expected {d}")
        try:
            rows.append([float(p) for p in parts])
        except ValueError as exc:
            raise ValueError(f"{path}: row {i} contains a non-numeric entry") from exc
    return SymmetricMatrix(np.array(rows), check_symmetry_tol=SYMMETRY_LOAD_TOL)
