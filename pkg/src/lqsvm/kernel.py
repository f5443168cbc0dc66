"""Gaussian kernel and the median-distance width heuristic."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MEDIAN_SENTINEL = -0.5


@dataclass(frozen=True)
class KernelConfig:
    """Gaussian width; ``-0.5`` asks for the median pairwise distance of the data."""

    gamma: float = 1.0

    def __post_init__(self):
        if not (self.gamma > 0 or self.gamma == MEDIAN_SENTINEL):
            raise ValueError(f"gamma must be > 0 or exactly {MEDIAN_SENTINEL}, got {self.gamma}")

    @property
    def uses_median(self) -> bool:
        return self.gamma == MEDIAN_SENTINEL


def gaussian_kernel(x, y, gamma_eff: float) -> float:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {y.shape}")
    if not gamma_eff > 0:
        raise ValueError("gamma_eff must be positive")
    return float(np.exp(-gamma_eff * np.sum((x - y) ** 2)))


def squared_distances(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Exact pairwise squared Euclidean distances (no expansion trick)."""
    A = np.atleast_2d(np.asarray(A, dtype=float))
    B = np.atleast_2d(np.asarray(B, dtype=float))
    if A.shape[1] != B.shape[1]:
        raise ValueError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    diff = A[:, None, :] - B[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def cross_kernel(A: np.ndarray, B: np.ndarray, gamma_eff: float) -> np.ndarray:
    return np.exp(-gamma_eff * squared_distances(A, B))


def kernel_matrix(X: np.ndarray, gamma_eff: float) -> np.ndarray:
    K = cross_kernel(X, X, gamma_eff)
    # enforce exact symmetry and unit diagonal
    K = np.triu(K) + np.triu(K, 1).T
    np.fill_diagonal(K, 1.0)
    return K


def median_pairwise_distance(X: np.ndarray) -> float:
    """Median over unordered pairs i<j; even counts average the two middle values."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    n = X.shape[0]
    if n < 2:
        return 0.0
    iu = np.triu_indices(n, 1)
    return float(np.median(np.sqrt(squared_distances(X, X)[iu])))


def resolve_gamma(cfg: KernelConfig, points) -> float:
    """Effective gamma for ``exp(-gamma * |x-y|^2)`` on a given neighborhood.

    ``points`` may be a feature matrix or anything with a ``features`` attribute.
    The median sentinel maps to ``1 / sigma**2`` with sigma the median distance;
    a zero median (coincident points) falls back to 1.
    """
    if not cfg.uses_median:
        return float(cfg.gamma)
    X = getattr(points, "features", points)
    sigma = median_pairwise_distance(X)
    if sigma <= 0:
        return 1.0
    return 1.0 / sigma**2
