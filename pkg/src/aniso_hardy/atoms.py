"""Anisotropic (p(.), q, s)-atoms: construction by moment projection and validation."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .dilation import Dilation, DilatedBall, QuasiNormEvaluator
from .exceptions import DegenerateProfile, PreconditionError
from .grid import GriddedFunction
from .varexp import ExponentFunction, indicator, luxemburg_norm

MOMENT_RTOL = 1e-8
# atoms are scaled to sit this far below the size budget
SIZE_SLACK = 1e-9
MAX_RETRIES = 8


def minimal_s(p: ExponentFunction, d: Dilation) -> int:
    """``max(0, floor((1/p_- - 1) ln b / ln lambda_-))``."""
    raw = (1.0 / p.p_minus - 1.0) * math.log(d.b) / math.log(d.lambda_minus)
    # absorb rounding when the product is an exact integer
    return max(0, math.floor(raw + 1e-12))


def lq_norm(f: GriddedFunction, q: float) -> float:
    """Midpoint-rule ``L^q`` norm; exact sample maximum for ``q = inf``."""
    if not q >= 1:
        raise PreconditionError("q must lie in [1, inf]")
    vals = np.abs(f.values)
    if math.isinf(q):
        return float(vals.max(initial=0.0))
    if q == 1:
        return float(np.sum(vals) * f.cell_volume)
    scale = float(vals.max(initial=0.0))
    if scale == 0.0:
        return 0.0
    return scale * float(np.sum((vals / scale) ** q) * f.cell_volume) ** (1.0 / q)


def multi_indices(n: int, degree: int) -> list[tuple[int, ...]]:
    """All ``alpha`` in Z_+^n with ``|alpha| <= degree``, graded order."""
    out = []
    for total in range(degree + 1):
        for alpha in itertools.product(range(total + 1), repeat=n):
            if sum(alpha) == total:
                out.append(alpha)
    return out


def _monomials(z: np.ndarray, alphas) -> np.ndarray:
    return np.stack([np.prod(z ** np.asarray(a), axis=1) for a in alphas], axis=1)


@dataclass(frozen=True, eq=False)
class Atom:
    """A ``(p(.), q, s)``-atom sampled on a grid over its ball.

    ``size_budget = |B|^{1/q} / ||chi_B||_{L^{p(.)}}`` with ``|B| = b^k`` and the
    indicator norm taken on the atom's own grid.
    """

    ball: DilatedBall
    q: float
    s: int
    profile: GriddedFunction
    lq_norm_value: float
    size_budget: float
    chi_norm: float
    measure: float

    @property
    def level(self) -> int:
        return self.ball.level

    def scaled(self, factor: float) -> "Atom":
        """Same support and moments, profile multiplied by ``factor`` (may stop being an atom)."""
        return Atom(
            self.ball, self.q, self.s, self.profile.scaled(factor),
            abs(factor) * self.lq_norm_value, self.size_budget, self.chi_norm, self.measure,
        )

    def with_profile(self, profile: GriddedFunction) -> "Atom":
        return Atom(self.ball, self.q, self.s, profile, lq_norm(profile, self.q),
                    self.size_budget, self.chi_norm, self.measure)


@dataclass
class AtomReport:
    support_ok: bool
    size_ok: bool
    moments_ok: bool
    worst_moment: float
    size_ratio: float

    @property
    def valid(self) -> bool:
        return self.support_ok and self.size_ok and self.moments_ok


def _check_q(q: float, p: ExponentFunction) -> float:
    q = float(q)
    if not q > max(p.p_plus, 1.0):
        raise PreconditionError(f"q must exceed max(p_+, 1) = {max(p.p_plus, 1.0):g}, got {q:g}")
    return q


def _ball_grid(qn: QuasiNormEvaluator, ball: DilatedBall, resolution):
    lo, hi = qn.bounding_box(ball)
    res = (int(resolution),) * qn.n if np.isscalar(resolution) else tuple(resolution)
    return lo, hi, res


def size_budget(ball: DilatedBall, q: float, p: ExponentFunction, qn: QuasiNormEvaluator, resolution=256):
    """Return ``(budget, chi_norm, measure)`` for ``ball`` on the given grid."""
    chi = indicator(_ball_grid(qn, ball, resolution), qn, ball)
    if not np.any(chi.values):
        raise PreconditionError("grid too coarse: no cell midpoint inside the ball")
    chi_norm = luxemburg_norm(chi, p)
    measure = qn.b ** ball.level
    budget = (measure ** (1.0 / q) if not math.isinf(q) else 1.0) / chi_norm
    return budget, chi_norm, measure


def default_resolution(n: int) -> int:
    return {1: 512, 2: 96}.get(n, 32)


def make_atom(
    ball: DilatedBall,
    q: float,
    s: int,
    p: ExponentFunction,
    qn: QuasiNormEvaluator,
    seed: int = 0,
    resolution=None,
) -> Atom:
    """Seeded smooth atom on ``ball`` with moments through degree ``s`` removed.

    The seed profile is ``w * P`` where ``w = exp(-1/(1 - Q/c))`` is the bump
    in the ball's quadratic form ``Q`` and ``P`` a random polynomial of degree
    ``s + 1`` in box-normalised coordinates. Moments of degree <= ``s`` are
    projected out with the weighted Gram system ``G_ab = sum w m_a m_b``, so
    they vanish for the discrete (midpoint) measure. The result is scaled to
    ``lq_norm = size_budget * (1 - 1e-9)``.

    Raises
    ------
    PreconditionError
        If ``q <= max(p_+, 1)``, ``s < minimal_s`` or ``s < 0``.
    DegenerateProfile
        If eight seeds in a row project to (numerically) zero.
    """
    q = _check_q(q, p)
    s = int(s)
    if s < 0 or s < minimal_s(p, qn.dilation):
        raise PreconditionError(f"s={s} below minimal_s={minimal_s(p, qn.dilation)}")
    if ball.level < -qn.window or ball.level > qn.window or len(ball.center) != qn.n:
        raise PreconditionError("ball does not fit this dilation")
    resolution = default_resolution(qn.n) if resolution is None else resolution
    lo, hi, res = _ball_grid(qn, ball, resolution)
    center = ball.center_array
    half = 0.5 * (hi - lo)
    inv_k = qn.inverse_power(ball.level)
    e = qn.ellipsoid
    c0 = e.volume_scale

    def bump(x):
        t = e.form((x - center) @ inv_k.T) / c0
        out = np.zeros(len(x))
        inside = t < 1.0
        out[inside] = np.exp(-1.0 / (1.0 - t[inside]))
        return out

    budget, chi_norm, measure = size_budget(ball, q, p, qn, res)
    tmpl = GriddedFunction.from_callable(bump, lo, hi, res)
    pts = tmpl.points()
    w = tmpl.values.ravel()
    z = (pts - center) / half
    low = multi_indices(qn.n, s)
    full = multi_indices(qn.n, s + 1)
    basis = _monomials(z, low)
    gram = (basis * w[:, None]).T @ basis
    rng = np.random.default_rng(seed)
    for _ in range(MAX_RETRIES):
        coef = rng.standard_normal(len(full))
        poly = _monomials(z, full) @ coef
        g = w * poly
        proj = np.linalg.solve(gram, basis.T @ g)
        a0 = g - w * (basis @ proj)
        if np.abs(a0).max() > 1e-8 * np.abs(g).max():
            break
    else:
        raise DegenerateProfile("moment projection annihilated every seeded profile")

    raw = tmpl.with_values(a0)
    scale = budget * (1.0 - SIZE_SLACK) / lq_norm(raw, q)

    def func(x, _coef=coef, _proj=proj, _scale=scale):
        x = np.atleast_2d(x)
        zz = (x - center) / half
        ww = bump(x)
        return _scale * ww * (_monomials(zz, full) @ _coef - _monomials(zz, low) @ _proj)

    profile = tmpl.with_values(scale * a0, func)
    return Atom(ball, q, s, profile, lq_norm(profile, q), budget, chi_norm, measure)


def atom_from_profile(
    ball: DilatedBall,
    q: float,
    s: int,
    profile: GriddedFunction,
    p: ExponentFunction,
    qn: QuasiNormEvaluator,
    normalize: bool = True,
) -> Atom:
    """Wrap a user-supplied profile; optionally scale it to the size budget."""
    q = _check_q(q, p)
    budget, chi_norm, measure = size_budget(ball, q, p, qn, profile.resolution)
    lq = lq_norm(profile, q)
    if normalize:
        if lq == 0:
            raise DegenerateProfile("profile is identically zero")
        profile = profile.scaled(budget * (1.0 - SIZE_SLACK) / lq)
        lq = lq_norm(profile, q)
    return Atom(ball, q, int(s), profile, lq, budget, chi_norm, measure)


def odd_step_atom(p: ExponentFunction, qn: QuasiNormEvaluator, q: float = math.inf, resolution: int = 512) -> Atom:
    """1D atom ``chi_[-1/2,0) - chi_[0,1/2)`` on ``B_0`` (requires ``B_0 = (-1/2, 1/2)``)."""
    if qn.n != 1:
        raise PreconditionError("odd step atom is one-dimensional")
    ball = DilatedBall((0.0,), 0)
    lo, hi = qn.bounding_box(ball)

    def func(x):
        x = np.atleast_2d(x)[:, 0]
        inside = (x > lo[0]) & (x < hi[0])
        return np.where(inside, np.where(x < 0.0, 1.0, -1.0), 0.0)

    prof = GriddedFunction.from_callable(func, lo, hi, resolution)
    return atom_from_profile(ball, q, 0, prof, p, qn)


def moment_errors(f: GriddedFunction, center: np.ndarray, diam: float, s: int) -> np.ndarray:
    """``|int f(x) (x - center)^alpha dx| / (||f||_1 diam^|alpha|)`` for ``|alpha| <= s``."""
    pts = f.points()
    z = (pts - center) / diam
    alphas = multi_indices(f.ndim, s)
    moms = _monomials(z, alphas).T @ f.values.ravel() * f.cell_volume
    l1 = f.l1_norm()
    if l1 == 0:
        return np.zeros(len(alphas))
    return np.abs(moms) / l1


def validate_atom(a: Atom, p: ExponentFunction, qn: QuasiNormEvaluator) -> AtomReport:
    """Recompute support, size and vanishing moments by quadrature.

    Moments are taken about the ball centre in units of ``||a||_1 diam(B)^|alpha|``;
    for polynomial degrees <= ``s`` this is equivalent to the raw moments.
    """
    f = a.profile
    pts = f.points()
    outside = ~qn.contains(a.ball, pts)
    support_ok = bool(np.all(f.values.ravel()[outside] == 0.0))
    budget = a.size_budget
    lq = lq_norm(f, a.q)
    ratio = lq / budget
    size_ok = lq <= budget * (1 + 1e-9)
    errs = moment_errors(f, a.ball.center_array, qn.diameter(a.ball.level), a.s)
    worst = float(errs.max(initial=0.0))
    return AtomReport(support_ok, bool(size_ok), worst <= MOMENT_RTOL, worst, float(ratio))
