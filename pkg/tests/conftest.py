"""Shared test helpers: seeded random matrices and brute-force oracles."""

import numpy as np

from privcov import SymmetricMatrix


def random_symmetric(gen: np.random.Generator, d: int, scale: float = 1.0) -> SymmetricMatrix:
    a = gen.standard_normal((d, d)) * scale
    return SymmetricMatrix((a + a.T) / 2.0)


def random_psd(gen: np.random.Generator, d: int) -> SymmetricMatrix:
    b = gen.standard_normal((d, d))
    return SymmetricMatrix(b @ b.T)


def brute_force_covariance(points: np.ndarray) -> np.ndarray:
    """Direct summation oracle (1/n) sum_i x_i x_i^T, one outer product at a
    time, independent of the matmul-based implementation."""
    d, n = points.shape
    acc = np.zeros((d, d))
    for i in range(n):
        acc += np.outer(points[:, i], points[:, i])
    return acc / n


def power_iteration_spectral_norm(a: np.ndarray, iterations: int = 4000) -> float:
    """Spectral-norm oracle: power iteration on A^2 (PSD), returning the
    square root of its top eigenvalue."""
    gen = np.random.default_rng(12345)
    y = gen.standard_normal(a.shape[0])
    y /= np.linalg.norm(y)
    for _ in range(iterations):
        y = a @ (a @ y)
        nrm = np.linalg.norm(y)
        if nrm == 0.0:
            return 0.0
        y /= nrm
    return float(np.sqrt(y @ (a @ (a @ y))))
