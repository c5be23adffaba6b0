"""Uniform tensor grids carrying sampled functions (midpoint rule)."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

Func = Callable[[np.ndarray], np.ndarray]


def _as_resolution(resolution, n: int) -> tuple[int, ...]:
    if np.isscalar(resolution):
        res = (int(resolution),) * n
    else:
        res = tuple(int(r) for r in resolution)
    if len(res) != n or min(res) < 1:
        raise ValueError(f"bad resolution {resolution!r} for dimension {n}")
    return res


@dataclass(frozen=True, eq=False)
class GriddedFunction:
    """Samples of a compactly supported function at cell midpoints of a box.

    Parameters
    ----------
    lo, hi : array_like
        Opposite corners of the axis-aligned box.
    values : ndarray
        Samples with shape equal to the per-axis resolution.
    func : callable, optional
        Closed-form evaluator ``func(points) -> values`` for ``points`` of
        shape ``(N, n)``. When present, refinement and resampling evaluate it
        directly instead of interpolating.
    """

    lo: np.ndarray
    hi: np.ndarray
    values: np.ndarray
    func: Optional[Func] = field(default=None, repr=False)

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lo, dtype=float))
        hi = np.atleast_1d(np.asarray(self.hi, dtype=float))
        values = np.asarray(self.values)
        if lo.shape != hi.shape or lo.ndim != 1:
            raise ValueError("lo and hi must be 1D arrays of equal length")
        if np.any(hi <= lo):
            raise ValueError("box must have positive volume")
        if values.ndim != lo.size:
            raise ValueError("values must have one axis per box dimension")
        if not np.all(np.isfinite(values)):
            raise ValueError("values must be finite")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "values", values)

    @classmethod
    def from_callable(cls, func: Func, lo, hi, resolution) -> "GriddedFunction":
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        res = _as_resolution(resolution, lo.size)
        pts = grid_points(lo, hi, res)
        vals = np.asarray(func(pts)).reshape(res)
        return cls(lo, hi, vals, func)

    @property
    def ndim(self) -> int:
        return self.lo.size

    @property
    def resolution(self) -> tuple[int, ...]:
        return self.values.shape

    @property
    def spacing(self) -> np.ndarray:
        return (self.hi - self.lo) / np.asarray(self.resolution)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def center(self) -> np.ndarray:
        return 0.5 * (self.lo + self.hi)

    def axes(self) -> list[np.ndarray]:
        return grid_axes(self.lo, self.hi, self.resolution)

    def points(self) -> np.ndarray:
        return grid_points(self.lo, self.hi, self.resolution)

    def with_values(self, values, func: Optional[Func] = None) -> "GriddedFunction":
        return GriddedFunction(self.lo, self.hi, np.asarray(values).reshape(self.resolution), func)

    def scaled(self, factor) -> "GriddedFunction":
        func = None
        if self.func is not None:
            inner = self.func
            func = lambda x: factor * inner(x)  # noqa: E731
        return GriddedFunction(self.lo, self.hi, factor * self.values, func)

    def integral(self):
        return np.sum(self.values) * self.cell_volume

    def l1_norm(self) -> float:
        return float(np.sum(np.abs(self.values)) * self.cell_volume)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        """Evaluate at arbitrary points (closed form if known, else linear interpolation)."""
        points = np.atleast_2d(points)
        if self.func is not None:
            return np.asarray(self.func(points))
        from scipy.interpolate import RegularGridInterpolator

        interp = RegularGridInterpolator(
            self.axes(), self.values, method="linear", bounds_error=False, fill_value=0.0
        )
        return interp(points)

    def resampled(self, lo, hi, resolution) -> "GriddedFunction":
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        res = _as_resolution(resolution, lo.size)
        vals = self.evaluate(grid_points(lo, hi, res)).reshape(res)
        return GriddedFunction(lo, hi, vals, self.func)

    def refined(self, factor: int = 2) -> "GriddedFunction":
        if self.func is None:
            raise ValueError("refinement needs a closed-form evaluator")
        res = tuple(factor * r for r in self.resolution)
        return GriddedFunction.from_callable(self.func, self.lo, self.hi, res)

    def coarsened(self) -> "GriddedFunction":
        """Average 2^n blocks of cells; every resolution must be even."""
        if any(r % 2 for r in self.resolution):
            raise ValueError("coarsening needs even resolution on every axis")
        v = self.values
        for axis in range(self.ndim):
            shape = list(v.shape)
            shape[axis : axis + 1] = [shape[axis] // 2, 2]
            v = v.reshape(shape).mean(axis=axis + 1)
        return GriddedFunction(self.lo, self.hi, v, self.func)


def grid_axes(lo, hi, resolution) -> list[np.ndarray]:
    return [
        lo[i] + (np.arange(r) + 0.5) * (hi[i] - lo[i]) / r for i, r in enumerate(resolution)
    ]


def grid_points(lo, hi, resolution) -> np.ndarray:
    axes = grid_axes(lo, hi, resolution)
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)
