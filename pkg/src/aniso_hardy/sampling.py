"""Deterministic direction sets and seeded point samplers."""

from __future__ import annotations

import numpy as np
from scipy.stats import norm, qmc


def sphere_directions(n: int, count: int, offset: float = 0.0) -> np.ndarray:
    """Unit vectors spread over the sphere S^{n-1}.

    In 1D the sphere is {-1, +1} and ``count`` is ignored. In 2D the angles
    are equispaced (shifted by ``offset`` of one spacing). Higher dimensions
    use an unscrambled Halton sequence pushed through the normal quantile.
    """
    if n < 1:
        raise ValueError("dimension must be >= 1")
    if n == 1:
        return np.array([[-1.0], [1.0]])
    if count < 1:
        raise ValueError("count must be >= 1")
    if n == 2:
        theta = 2.0 * np.pi * (np.arange(count) + 0.5 + offset) / count
        return np.column_stack([np.cos(theta), np.sin(theta)])
    # first Halton point is the origin, which maps to -inf
    u = qmc.Halton(d=n, scramble=False).random(count + 1)[1:]
    g = norm.ppf(np.clip(u, 1e-12, 1 - 1e-12))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def random_directions(rng: np.random.Generator, count: int, n: int) -> np.ndarray:
    g = rng.standard_normal((count, n))
    nrm = np.linalg.norm(g, axis=1, keepdims=True)
    nrm[nrm == 0] = 1.0
    return g / nrm


def uniform_unit_ball(rng: np.random.Generator, count: int, n: int) -> np.ndarray:
    """Uniform samples from the open Euclidean unit ball."""
    raw = rng.standard_normal((count, n + 1))
    dirs = raw[:, :n] / np.linalg.norm(raw[:, :n], axis=1, keepdims=True)
    # radius from the last column so each row uses its own draws
    u = norm.cdf(raw[:, n])
    return dirs * (u ** (1.0 / n))[:, None]
