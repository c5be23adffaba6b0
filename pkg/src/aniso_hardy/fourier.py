"""Quadrature Fourier transforms, the dilation operator and atomic Fourier constants.

Convention: ``f^(xi) = int f(y) exp(-2 pi i <y, xi>) dy``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .atoms import Atom, lq_norm
from .dilation import QuasiNormEvaluator
from .exceptions import PreconditionError, PropertyViolation, ResolutionLoss
from .grid import GriddedFunction
from .sampling import sphere_directions
from .varexp import ExponentFunction

# complex entries per chunk in the separable transform
_CHUNK_ENTRIES = 2_000_000


@dataclass
class SpectrumSample:
    """Transform values at explicit frequency points."""

    points: np.ndarray
    values: np.ndarray
    quad_tol: float = 0.0
    certificate: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        if len(self.points) != len(self.values):
            raise ValueError("points and values differ in length")


def _as_frequencies(xi, n: int):
    xi = np.asarray(xi, dtype=float)
    if xi.ndim == 0:
        return xi.reshape(1, 1), True
    if xi.ndim == 1:
        if n == 1:
            return xi[:, None], False
        if xi.size == n:
            return xi[None, :], True
    if xi.ndim != 2 or xi.shape[1] != n:
        raise PreconditionError(f"frequencies must have shape (N, {n})")
    return xi, False


def fourier_transform(f: GriddedFunction, xi):
    """Midpoint-rule ``int f(y) exp(-2 pi i <y, xi>) dy`` at one or many ``xi``.

    The sum is contracted one axis at a time (tensor grid), with phases
    measured from the box centre to limit cancellation.
    """
    pts, single = _as_frequencies(xi, f.ndim)
    n = f.ndim
    center = f.center
    offsets = [ax - center[i] for i, ax in enumerate(f.axes())]
    vals = f.values.astype(complex)
    res = f.resolution
    rest = int(np.prod(res[1:])) if n > 1 else 1
    chunk = max(1, _CHUNK_ENTRIES // max(rest, 1))
    out = np.empty(len(pts), dtype=complex)
    flat = vals.reshape(res[0], rest)
    for start in range(0, len(pts), chunk):
        x = pts[start : start + chunk]
        m = len(x)
        t = np.exp(-2j * np.pi * np.outer(x[:, 0], offsets[0])) @ flat
        for axis in range(1, n):
            t = t.reshape(m, res[axis], -1)
            e = np.exp(-2j * np.pi * np.outer(x[:, axis], offsets[axis]))
            t = np.einsum("mj,mjr->mr", e, t)
        out[start : start + m] = t.reshape(m) * np.exp(-2j * np.pi * (x @ center))
    out *= f.cell_volume
    return out[0] if single else out


def transform_tolerance(f: GriddedFunction, xi) -> float:
    """Change of the transform under one grid doubling (coarsening if no closed form)."""
    base = fourier_transform(f, xi)
    if f.func is not None:
        other = fourier_transform(f.refined(), xi)
    else:
        other = fourier_transform(f.coarsened(), xi)
    return float(np.max(np.abs(np.atleast_1d(base - other)), initial=0.0))


def _matrix(qn_or_matrix) -> np.ndarray:
    if isinstance(qn_or_matrix, QuasiNormEvaluator):
        return qn_or_matrix.dilation.matrix
    return np.atleast_2d(np.asarray(qn_or_matrix, dtype=float))


def dilate(
    f: GriddedFunction,
    qn,
    j: int,
    resolution=None,
    keep_density: bool = False,
    min_density: float = 0.25,
) -> GriddedFunction:
    """``y -> f(A^j y)`` resampled on the bounding box of ``A^{-j}(box)``.

    With ``keep_density`` the resolution grows so the number of cells per
    unit of mapped support matches the input grid (bounding boxes of
    non-diagonal images are larger than the image itself).

    Warns
    -----
    ResolutionLoss
        If the relative sample density drops below ``min_density``.
    """
    a = _matrix(qn)
    j = int(j)
    if j == 0 and resolution is None:
        return f
    a_j = np.linalg.matrix_power(a, j)
    a_inv_j = np.linalg.inv(a_j)
    n = f.ndim
    corners = np.array(np.meshgrid(*[[f.lo[i], f.hi[i]] for i in range(n)], indexing="ij")).reshape(n, -1).T
    mapped = corners @ a_inv_j.T
    lo, hi = mapped.min(axis=0), mapped.max(axis=0)
    det = abs(np.linalg.det(a_inv_j))
    old_cells = float(np.prod(f.resolution))
    if resolution is None:
        res = f.resolution
        if keep_density:
            box_ratio = np.prod(hi - lo) / (det * np.prod(f.hi - f.lo))
            grow = box_ratio ** (1.0 / n)
            res = tuple(int(math.ceil(r * grow)) for r in f.resolution)
    else:
        res = (int(resolution),) * n if np.isscalar(resolution) else tuple(resolution)
    new_cell = np.prod((hi - lo) / np.asarray(res))
    density = det * np.prod(f.hi - f.lo) / new_cell / old_cells
    if density < min_density:
        warnings.warn(f"resampling density fell to {density:.3g} of the input", ResolutionLoss, stacklevel=2)
    if f.func is not None:
        inner = f.func
        func = lambda y: inner(np.atleast_2d(y) @ a_j.T)  # noqa: E731
        return GriddedFunction.from_callable(func, lo, hi, res)
    src = f

    def func(y):
        return src.evaluate(np.atleast_2d(y) @ a_j.T)

    out = GriddedFunction.from_callable(func, lo, hi, res)
    return GriddedFunction(out.lo, out.hi, out.values)


@dataclass
class CommutationReport:
    j: int
    max_deviation: float
    tol_lhs: float
    tol_rhs: float
    floor: float
    factor: float
    passed: bool


def verify_commutation(
    f: GriddedFunction,
    qn: QuasiNormEvaluator,
    j: int,
    xi,
    factor: float = 10.0,
    floor_rtol: float = 1e-12,
    raise_on_failure: bool = True,
) -> CommutationReport:
    """Compare ``b^j (D_{A*}^j (D_A^j f)^)(xi)`` with ``f^(xi)``.

    Each side's quadrature tolerance is its change under grid doubling; the
    check passes when the deviation is within ``factor`` times their sum plus
    a rounding floor of ``floor_rtol * ||f||_1``.
    """
    pts, _ = _as_frequencies(xi, f.ndim)
    a = qn.dilation.matrix
    b = qn.b
    moved = pts @ np.linalg.matrix_power(a, j)  # rows of (A^T)^j xi
    g = dilate(f, qn, j, keep_density=True)
    lhs = b**j * fourier_transform(g, moved)
    rhs = fourier_transform(f, pts)
    if g.func is not None:
        g2 = GriddedFunction.from_callable(g.func, g.lo, g.hi, tuple(2 * r for r in g.resolution))
        tol_l = b**j * float(np.max(np.abs(fourier_transform(g2, moved) - lhs / b**j)))
    else:
        tol_l = b**j * transform_tolerance(g, moved)
    tol_r = transform_tolerance(f, pts)
    dev = float(np.max(np.abs(lhs - rhs)))
    floor = floor_rtol * f.l1_norm()
    report = CommutationReport(int(j), dev, tol_l, tol_r, floor, factor, dev <= factor * (tol_l + tol_r) + floor)
    if not report.passed and raise_on_failure:
        raise PropertyViolation("dilation does not commute with the transform", witness=report)
    return report


@dataclass(frozen=True)
class FrequencyShells:
    """Points on the level sets ``rho_{A*}(xi) = b^m``, ``m_min <= m <= m_max``.

    Each shell carries ``directions`` boundary directions (2 in 1D) and
    ``radial`` interior radii between ``B*_m`` and ``B*_{m+1}``.
    """

    m_min: int = -6
    m_max: int = 6
    directions: int = 32
    radial: int = 2

    def doubled(self) -> "FrequencyShells":
        return FrequencyShells(self.m_min, self.m_max, 2 * self.directions, 2 * self.radial)

    def points(self, qn_star: QuasiNormEvaluator) -> np.ndarray:
        return np.concatenate([self.shell(qn_star, m) for m in range(self.m_min, self.m_max + 1)])

    def shell(self, qn_star: QuasiNormEvaluator, m: int) -> np.ndarray:
        e = qn_star.ellipsoid
        u = sphere_directions(qn_star.n, self.directions)
        edge = e.boundary_points(u)
        s_out = np.sqrt(e.volume_scale / e.form(edge @ qn_star.inverse_power(1).T))
        frac = (np.arange(self.radial) + 0.5) / self.radial
        s = 1.0 + (s_out[:, None] - 1.0) * frac[None, :]
        y = (edge[:, None, :] * s[:, :, None]).reshape(-1, qn_star.n)
        return y @ qn_star.power(m).T


def frequency_points(xi, qn: QuasiNormEvaluator) -> np.ndarray:
    if isinstance(xi, FrequencyShells):
        return xi.points(qn.star)
    pts, _ = _as_frequencies(xi, qn.n)
    return pts


def _nonzero(pts: np.ndarray) -> np.ndarray:
    return np.any(pts != 0.0, axis=1)


def lemma32_constant(
    a: Atom,
    qn: QuasiNormEvaluator,
    k_range: Sequence[int],
    xi,
    per_level: bool = False,
):
    """Empirical ``C`` in ``|(D_A^k a_k)^(x)| <= C b^{-k/q} ||a_k||_q min(1, |x|^{s+1})``.

    For each level ``k`` the atom's shape is transported to ``B_k`` via
    ``a_k(y) = a(A^{level-k} y)`` and the bound is sampled at the nonzero
    frequencies. Returns the supremum, or ``{k: C_k}`` with ``per_level``.
    """
    pts = frequency_points(xi, qn)
    pts = pts[_nonzero(pts)]
    q = a.q
    b = qn.b
    envelope = np.minimum(1.0, np.linalg.norm(pts, axis=1) ** (a.s + 1))
    out = {}
    for k in range(int(k_range[0]), int(k_range[1]) + 1):
        moved = dilate(a.profile, qn, a.level - k, keep_density=True)
        norm_q = lq_norm(moved, q)
        dk = dilate(moved, qn, k, keep_density=True)
        vals = np.abs(fourier_transform(dk, pts))
        scale = (b ** (-k / q) if not math.isinf(q) else 1.0) * norm_q
        out[k] = float(np.max(vals / (scale * envelope)))
    return out if per_level else max(out.values())


def growth_envelope(rho: np.ndarray, p: ExponentFunction) -> np.ndarray:
    """``max(rho^{1/p_- - 1}, rho^{1/p_+ - 1})``."""
    return np.maximum(rho ** (1.0 / p.p_minus - 1.0), rho ** (1.0 / p.p_plus - 1.0))


@dataclass
class EmpiricalConstant:
    value: float
    argmax: np.ndarray
    argmax_rho: float


def lemma33_constant(a: Atom, qn: QuasiNormEvaluator, p: ExponentFunction, xi, details: bool = False):
    """Empirical ``C`` in ``|a^(x)| <= C max(rho*(x)^{1/p_- - 1}, rho*(x)^{1/p_+ - 1})``."""
    if not 0.0 < p.p_minus <= p.p_plus <= 1.0:
        raise PreconditionError("need 0 < p_- <= p_+ <= 1")
    pts = frequency_points(xi, qn)
    pts = pts[_nonzero(pts)]
    rho = qn.star(pts)
    ratio = np.abs(fourier_transform(a.profile, pts)) / growth_envelope(rho, p)
    i = int(np.argmax(ratio))
    if details:
        return EmpiricalConstant(float(ratio[i]), pts[i], float(rho[i]))
    return float(ratio[i])
