"""Per-voxel occupancy distributions on a fixed particle support.

Every voxel of a map carries ``K`` weights over the same support points
``m_j`` in (0, 1). Occupancy beliefs are kept as independent marginals; no
correlation between voxels is stored.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import GridSpec

DEFAULT_K = 32
BERNOULLI_EPS = 1e-6
MIN_POSTERIOR_MASS = 1e-300


class ZeroMassPosterior(ValueError):
    """Raised when a likelihood leaves no probability mass on the support."""


def midpoint_support(k: int) -> np.ndarray:
    if k < 2:
        raise ValueError(f"support size must be at least 2, got {k}")
    return (np.arange(1, k + 1) - 0.5) / k


def bernoulli_support(eps: float = BERNOULLI_EPS) -> np.ndarray:
    """Two-atom support standing in for a binary voxel, kept off {0, 1}."""
    if not 0 < eps < 0.5:
        raise ValueError(f"eps must lie in (0, 0.5), got {eps}")
    return np.array([eps, 1.0 - eps])


@dataclass
class VoxelBelief:
    support: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.support = np.asarray(self.support, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        if self.support.shape != self.weights.shape or self.support.ndim != 1:
            raise ValueError("support and weights must be 1D arrays of equal length")
        if np.any(self.weights < 0) or abs(self.weights.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be non-negative and sum to 1")

    @property
    def mean(self) -> float:
        return float(stats(self.weights, self.support)[0])

    @property
    def std(self) -> float:
        return float(stats(self.weights, self.support)[1])


def stats(weights: np.ndarray, support: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Mean and standard deviation of beliefs stored along the last axis."""
    mean = weights @ support
    second = weights @ (support * support)
    var = np.maximum(second - mean * mean, 0.0)
    return mean, np.sqrt(var)


def apply_linear_update(weights: np.ndarray, support: np.ndarray,
                        alpha, beta) -> np.ndarray:
    """Multiply beliefs by the affine likelihood ``alpha*m + beta`` and renormalize.

    ``weights`` may hold one belief ``(K,)`` or a stack ``(L, K)`` with one
    ``alpha``/``beta`` per row. Likelihood values down to -1e-12 are treated as
    round-off and clipped to zero.
    """
    alpha = np.asarray(alpha, dtype=float)
    beta = np.asarray(beta, dtype=float)
    lik = alpha[..., None] * support + beta[..., None]
    if np.any(lik < -1e-12):
        raise ValueError("affine likelihood is negative on the support")
    post = weights * np.maximum(lik, 0.0)
    mass = post.sum(axis=-1, keepdims=True)
    if np.any(mass < MIN_POSTERIOR_MASS):
        raise ZeroMassPosterior("posterior has no mass left on the support")
    return post / mass


class MapBelief:
    """Collection of voxel marginals over a grid."""

    def __init__(self, grid: GridSpec, support: np.ndarray, weights: np.ndarray):
        support = np.asarray(support, dtype=float)
        weights = np.asarray(weights, dtype=float)
        if weights.shape != (grid.n, len(support)):
            raise ValueError(f"weights must have shape {(grid.n, len(support))}, got {weights.shape}")
        if np.any(support <= 0) or np.any(support >= 1):
            raise ValueError("support points must lie strictly inside (0, 1)")
        self.grid = grid
        self.support = support
        self.weights = weights

    @property
    def k(self) -> int:
        return len(self.support)

    def voxel(self, voxel_id: int) -> VoxelBelief:
        return VoxelBelief(self.support.copy(), self.weights[voxel_id].copy())

    def means(self, ids=None) -> np.ndarray:
        w = self.weights if ids is None else self.weights[ids]
        return w @ self.support

    def stats(self) -> tuple[np.ndarray, np.ndarray]:
        return stats(self.weights, self.support)

    def copy(self) -> "MapBelief":
        return MapBelief(self.grid, self.support.copy(), self.weights.copy())


def init_prior(grid: GridSpec, k: int = DEFAULT_K) -> MapBelief:
    """Uniform belief over ``k`` midpoints of [0, 1] in every voxel."""
    support = midpoint_support(k)
    return MapBelief(grid, support, np.full((grid.n, k), 1.0 / k))


def init_bernoulli_prior(grid: GridSpec, p: float = 0.5, eps: float = BERNOULLI_EPS) -> MapBelief:
    """Near-binary belief: weight ``p`` on ``1 - eps`` and ``1 - p`` on ``eps``."""
    support = bernoulli_support(eps)
    weights = np.tile([1.0 - p, p], (grid.n, 1))
    return MapBelief(grid, support, weights)
