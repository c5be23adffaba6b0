"""Finite atomic decompositions and the Fourier-side inequalities they satisfy.

Everything here works with the quantity of the decomposition at hand; the
infimum over all decompositions is never searched, so every upper bound
checked against it is also a bound against the true quasi-norm.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.ndimage import maximum_filter1d
from scipy.signal import fftconvolve

from .atoms import Atom, default_resolution, make_atom, minimal_s, validate_atom
from .dilation import DilatedBall, QuasiNormEvaluator
from .exceptions import PreconditionError, PropertyViolation, TailDivergence
from .fourier import (
    FrequencyShells,
    SpectrumSample,
    fourier_transform,
    frequency_points,
    growth_envelope,
    transform_tolerance,
)
from .grid import GriddedFunction, grid_points
from .sampling import sphere_directions
from .varexp import ExponentFunction, luxemburg_norm

L1_RTOL = 1e-6


@dataclass(frozen=True, eq=False)
class Decomposition:
    """``f = sum_j lambda_j a_j`` with the quantity of this representation.

    ``quantity`` is ``||g||_{L^{p(.)}}`` for
    ``g = {sum_j [|lambda_j| chi_{B_j} / ||chi_{B_j}||]^{p_}}^{1/p_}`` and is
    filled in by :func:`make_decomposition`.
    """

    lambdas: np.ndarray
    atoms: tuple
    p: ExponentFunction = field(repr=False)
    qn: QuasiNormEvaluator = field(repr=False)
    quantity: float = float("nan")

    def __post_init__(self):
        lam = np.atleast_1d(np.asarray(self.lambdas))
        if lam.ndim != 1 or len(lam) != len(self.atoms) or len(lam) == 0:
            raise PreconditionError("need one coefficient per atom and at least one term")
        object.__setattr__(self, "lambdas", lam)
        object.__setattr__(self, "atoms", tuple(self.atoms))

    def __len__(self) -> int:
        return len(self.atoms)

    @property
    def terms(self) -> list:
        return list(zip(self.lambdas, self.atoms))

    @property
    def min_s(self) -> int:
        return min(a.s for a in self.atoms)

    def scaled(self, t: float) -> "Decomposition":
        """Coefficients multiplied by ``t``; the quantity is recomputed, not rescaled."""
        return make_decomposition(t * self.lambdas, self.atoms, self.p, self.qn, validate=False)

    def permuted(self, order) -> "Decomposition":
        order = list(order)
        return Decomposition(self.lambdas[order], [self.atoms[i] for i in order], self.p, self.qn, self.quantity)


def make_decomposition(
    lambdas,
    atoms: Sequence[Atom],
    p: ExponentFunction,
    qn: QuasiNormEvaluator,
    validate: bool = True,
    resolution=None,
) -> Decomposition:
    """Build a decomposition, validate its atoms and compute its quantity.

    Raises
    ------
    PropertyViolation
        If ``validate`` and some atom fails :func:`validate_atom`.
    """
    if validate:
        for i, a in enumerate(atoms):
            rep = validate_atom(a, p, qn)
            if not rep.valid:
                raise PropertyViolation(f"term {i} is not an atom", witness=rep)
    dec = Decomposition(lambdas, atoms, p, qn)
    object.__setattr__(dec, "quantity", decomposition_quantity(dec, p, resolution=resolution))
    return dec


def random_decomposition(
    qn: QuasiNormEvaluator,
    p: ExponentFunction,
    count: int,
    seed: int = 0,
    q: float = math.inf,
    s: Optional[int] = None,
    levels: tuple = (-1, 1),
    spread: float = 2.0,
    resolution=None,
) -> Decomposition:
    """Seeded decomposition with random centres, levels and coefficients."""
    rng = np.random.default_rng(seed)
    s = minimal_s(p, qn.dilation) if s is None else int(s)
    atoms = []
    for i in range(int(count)):
        center = rng.uniform(-spread, spread, qn.n)
        level = int(rng.integers(levels[0], levels[1] + 1))
        atoms.append(make_atom(DilatedBall(center, level), q, s, p, qn, seed=seed * 1000 + i, resolution=resolution))
    lam = rng.uniform(0.2, 1.0, count) * rng.choice([-1.0, 1.0], count)
    return make_decomposition(lam, atoms, p, qn)


def common_grid(dec: Decomposition, resolution=None, min_cells: Optional[int] = None):
    """``(lo, hi, res)`` covering every ball, fine enough for the smallest one."""
    qn = dec.qn
    boxes = [qn.bounding_box(a.ball) for a in dec.atoms]
    lo = np.min([b[0] for b in boxes], axis=0)
    hi = np.max([b[1] for b in boxes], axis=0)
    if resolution is not None:
        res = (int(resolution),) * qn.n if np.isscalar(resolution) else tuple(resolution)
        return lo, hi, res
    if min_cells is None:
        min_cells = {1: 512, 2: 48}.get(qn.n, 16)
    cap = {1: 1024, 2: 1024}.get(qn.n, 128)
    width = np.min([b[1] - b[0] for b in boxes], axis=0)
    res = tuple(int(min(cap, math.ceil(min_cells * (hi[i] - lo[i]) / width[i]))) for i in range(qn.n))
    return lo, hi, res


def decomposition_quantity(dec: Decomposition, p: ExponentFunction, resolution=None, tol: float = 1e-10) -> float:
    """Luxemburg norm of the aggregated, normalised ball indicators on one grid.

    The indicator norms ``||chi_{B_j}||`` are computed on the same grid, so a
    single term returns ``|lambda_1|`` up to rounding.
    """
    qn = dec.qn
    lo, hi, res = common_grid(dec, resolution)
    pts = grid_points(lo, hi, res)
    pu = p.p_underline
    agg = np.zeros(len(pts))
    for lam, a in dec.terms:
        inside = qn.contains(a.ball, pts)
        if not inside.any():
            raise PreconditionError("common grid misses a ball entirely; raise the resolution")
        chi = GriddedFunction(lo, hi, inside.astype(float).reshape(res))
        norm = luxemburg_norm(chi, p, tol)
        agg += inside * (abs(lam) / norm) ** pu
    g = GriddedFunction(lo, hi, (agg ** (1.0 / pu)).reshape(res))
    return luxemburg_norm(g, p, tol)


@dataclass
class L1Report:
    l1: float
    quantity: float
    passed: bool


def l1_check(dec: Decomposition, p: Optional[ExponentFunction] = None, raise_on_failure: bool = True) -> L1Report:
    """Check ``sum |lambda_j| <= quantity`` with relative slack 1e-6."""
    if p is None or p is dec.p:
        quantity = dec.quantity
    else:
        quantity = decomposition_quantity(dec, p)
    l1 = float(np.sum(np.abs(dec.lambdas)))
    rep = L1Report(l1, quantity, l1 <= quantity * (1 + L1_RTOL))
    if not rep.passed and raise_on_failure:
        raise PropertyViolation(f"sum |lambda| = {l1:.12g} exceeds quantity {quantity:.12g}", witness=rep)
    return rep


def synthesize_F(dec: Decomposition, xi, with_tolerance: bool = False) -> SpectrumSample:
    """``F(xi) = sum_j lambda_j a_j^(xi)`` with the certificate ``sum_j |lambda_j| |a_j^(xi)|``.

    ``quad_tol`` (optional, costs one refined transform per atom) is
    ``sum_j |lambda_j| tol_j`` with ``tol_j`` the grid-doubling change of ``a_j^``.
    """
    pts = frequency_points(xi, dec.qn)
    values = np.zeros(len(pts), dtype=complex)
    cert = np.zeros(len(pts))
    tol = 0.0
    for lam, a in dec.terms:
        t = fourier_transform(a.profile, pts)
        values += lam * t
        cert += abs(lam) * np.abs(t)
        if with_tolerance:
            tol += abs(lam) * transform_tolerance(a.profile, pts)
    return SpectrumSample(pts, values, tol, cert)


def conjugate_symmetry_error(dec: Decomposition, xi) -> float:
    """``max |F(-xi) - conj F(xi)|`` (zero for real coefficients and atoms)."""
    pts = frequency_points(xi, dec.qn)
    return float(np.max(np.abs(synthesize_F(dec, -pts).values - np.conj(synthesize_F(dec, pts).values))))


def _check_p(p: ExponentFunction):
    if not 0.0 < p.p_minus <= p.p_plus <= 1.0:
        raise PreconditionError(f"need 0 < p_- <= p_+ <= 1, got [{p.p_minus:g}, {p.p_plus:g}]")


@dataclass
class Thm31Report:
    R: float
    R_doubled: float
    argmax: list
    argmax_rho: float
    quantity: float
    points: int
    certificate_ok: bool
    finite: bool

    @property
    def relative_change(self) -> float:
        return abs(self.R_doubled - self.R) / self.R if self.R > 0 else 0.0

    @property
    def passed(self) -> bool:
        return self.finite and self.certificate_ok


def _thm31_ratio(dec: Decomposition, p: ExponentFunction, pts: np.ndarray):
    pts = pts[np.any(pts != 0.0, axis=1)]
    spec = synthesize_F(dec, pts)
    rho = dec.qn.star(pts)
    env = growth_envelope(rho, p)
    ratio = np.abs(spec.values) / (dec.quantity * env)
    i = int(np.argmax(ratio))
    return float(ratio[i]), pts[i], float(rho[i]), spec, env


def verify_thm31(
    dec: Decomposition,
    p: Optional[ExponentFunction] = None,
    xi=None,
    raise_on_failure: bool = True,
) -> Thm31Report:
    """``R = sup |F(xi)| / (quantity * max(rho*(xi)^{1/p_- - 1}, rho*(xi)^{1/p_+ - 1}))``.

    ``xi`` defaults to :class:`FrequencyShells` ``(-6, 6)`` with 64 directions
    and 4 radii per shell; R is recomputed
    on the doubled shell sampling (explicit grids are not doubled).
    """
    p = dec.p if p is None else p
    _check_p(p)
    shells = FrequencyShells(directions=64, radial=4) if xi is None else xi
    pts = frequency_points(shells, dec.qn)
    R, arg, arg_rho, spec, _ = _thm31_ratio(dec, p, pts)
    if isinstance(shells, FrequencyShells):
        R2 = _thm31_ratio(dec, p, frequency_points(shells.doubled(), dec.qn))[0]
    else:
        R2 = R
    cert_ok = bool(np.all(np.isfinite(spec.certificate)) and np.all(np.abs(spec.values) <= spec.certificate * (1 + 1e-12) + 1e-300))
    rep = Thm31Report(R, R2, arg.tolist(), arg_rho, dec.quantity, len(pts), cert_ok, bool(np.isfinite(R) and np.isfinite(R2)))
    if not rep.passed and raise_on_failure:
        raise PropertyViolation("Fourier growth ratio is not finite", witness=rep)
    return rep


@dataclass
class Thm41Report:
    radii: list
    ratios: list
    decline: float
    decreasing_from: Optional[int]
    passed: bool
    offending_radius: Optional[float] = None


def default_radii(count: int = 12) -> np.ndarray:
    return 2.0 ** -np.arange(1, count + 1)


def verify_thm41(
    dec: Decomposition,
    p: Optional[ExponentFunction] = None,
    radii=None,
    directions: int = 16,
    decline: float = 0.1,
    raise_on_failure: bool = True,
) -> Thm41Report:
    """Decay of ``r(x) = |F(x)| / rho*(x)^{1/p_- - 1}`` along ``x = radius * u``.

    Uses the maximum over ``directions`` unit vectors per radius. Passes when
    the last value is at most ``decline`` times the first and the sequence is
    non-increasing over at least its final three radii.
    """
    p = dec.p if p is None else p
    if not 0.0 < p.p_minus <= 1.0:
        raise PreconditionError("need 0 < p_- <= 1")
    if dec.min_s < minimal_s(p, dec.qn.dilation):
        raise PreconditionError("every atom needs s >= minimal_s")
    radii = default_radii() if radii is None else np.asarray(radii, dtype=float)
    if np.any(radii <= 0) or np.any(np.diff(radii) >= 0):
        raise PreconditionError("radii must be positive and strictly decreasing")
    u = sphere_directions(dec.qn.n, directions)
    pts = (radii[:, None, None] * u[None, :, :]).reshape(-1, dec.qn.n)
    F = np.abs(synthesize_F(dec, pts).values)
    rho = dec.qn.star(pts)
    r = (F / rho ** (1.0 / p.p_minus - 1.0)).reshape(len(radii), len(u)).max(axis=1)
    start = len(r) - 1
    while start > 0 and r[start - 1] >= r[start]:
        start -= 1
    tail_ok = len(r) - start >= min(3, len(r))
    ok = bool(r[-1] <= decline * r[0] and tail_ok)
    offending = None
    if not ok:
        offending = float(radii[-1]) if r[-1] > decline * r[0] else float(radii[max(start - 1, 0)])
    rep = Thm41Report(radii.tolist(), r.tolist(), float(r[-1] / r[0]) if r[0] > 0 else 0.0, int(start), ok, offending)
    if not ok and raise_on_failure:
        raise PropertyViolation(f"ratio does not decay at radius {offending:g}", witness=rep)
    return rep


# ------------------------------------------------------ weighted integral bound

# exponents that appear in the proof displays (recorded, not used)
PROOF_DISPLAY_EXPONENTS = ("1 - 1/p_+ - 1/p_-", "p_+ - 1 - 1/p_-")


def weight_exponents(p: ExponentFunction) -> tuple[float, float]:
    """``(p_+ - 1 - p_+/p_-, p_+ - 2)``: weight is ``min(rho^first, rho^second)``."""
    return p.p_plus - 1.0 - p.p_plus / p.p_minus, p.p_plus - 2.0


def shell_weight(rho, p: ExponentFunction):
    a, b = weight_exponents(p)
    rho = np.asarray(rho, dtype=float)
    return np.minimum(rho**a, rho**b)


@dataclass(frozen=True)
class ShellRule:
    """Quadrature nodes ``y`` and weights ``w`` on the annulus ``B*_1 \\ B*_0``."""

    nodes: np.ndarray
    weights: np.ndarray


def _sphere_rule(n: int, count: int, half: bool = False):
    # with ``half`` only one of each pair +-u is kept and its weight doubled
    if n == 1:
        if half:
            return np.array([[1.0]]), np.array([2.0])
        return np.array([[-1.0], [1.0]]), np.ones(2)
    if n == 2:
        span = np.pi if half else 2.0 * np.pi
        theta = span * (np.arange(count) + 0.5) / count
        return np.column_stack([np.cos(theta), np.sin(theta)]), np.full(count, 2.0 * np.pi / count)
    if n == 3:
        m = max(4, int(math.ceil(math.sqrt(count / 2))))
        z, wz = np.polynomial.legendre.leggauss(m)
        k = 2 * m
        theta = 2.0 * np.pi * (np.arange(k) + 0.5) / k
        zz, tt = np.meshgrid(z, theta, indexing="ij")
        r = np.sqrt(1.0 - zz**2)
        u = np.stack([r * np.cos(tt), r * np.sin(tt), zz], axis=-1).reshape(-1, 3)
        w = (wz[:, None] * np.full(k, 2.0 * np.pi / k)[None, :]).ravel()
        return u, w
    raise PreconditionError("shell quadrature supports n <= 3")


def shell_rule(
    qn_star: QuasiNormEvaluator, angular: int, panels: int, order: int = 8, even: bool = False
) -> ShellRule:
    """Polar rule ``y = s E u`` with ``1 < s < s_out(u)``, ``dy = |det E| s^{n-1} ds dsigma(u)``.

    ``angular`` nodes on the sphere, ``panels`` Gauss-Legendre panels of
    ``order`` nodes each in ``s``. With ``even`` the rule is only valid for
    integrands with ``g(-y) = g(y)`` and uses half the sphere (1D and 2D).
    """
    e = qn_star.ellipsoid
    n = qn_star.n
    u, wu = _sphere_rule(n, angular, half=even and n <= 2)
    edge = e.boundary_points(u)
    s_out = np.sqrt(e.volume_scale / e.form(edge @ qn_star.inverse_power(1).T))
    g, wg = np.polynomial.legendre.leggauss(order)
    t = (np.arange(panels)[:, None] + 0.5 * (g[None, :] + 1.0)).ravel() / panels
    wt = np.tile(0.5 * wg, panels) / panels
    s = 1.0 + (s_out[:, None] - 1.0) * t[None, :]
    ws = (s_out[:, None] - 1.0) * wt[None, :]
    jac = abs(np.linalg.det(e.boundary_map))
    nodes = (edge[:, None, :] * s[:, :, None]).reshape(-1, n)
    weights = (wu[:, None] * ws * s ** (n - 1) * jac).ravel()
    return ShellRule(nodes, weights)


def _support_extent(dec: Decomposition) -> float:
    qn = dec.qn
    boxes = [qn.bounding_box(a.ball) for a in dec.atoms]
    lo = np.min([b[0] for b in boxes], axis=0)
    hi = np.max([b[1] for b in boxes], axis=0)
    return float(np.linalg.norm(hi - lo))


def _reference_radius(qn_star: QuasiNormEvaluator) -> float:
    # largest |y| over the reference annulus B*_1 \ B*_0
    e = qn_star.ellipsoid
    u = sphere_directions(qn_star.n, 720)
    edge = e.boundary_points(u)
    s_out = np.sqrt(e.volume_scale / e.form(edge @ qn_star.inverse_power(1).T))
    return float(np.max(np.linalg.norm(edge, axis=1) * s_out))


@dataclass
class Thm42Report:
    lhs: float
    lhs_upper: float
    quantity: float
    C: float
    C_upper: float
    shell_range: tuple
    shell_integrals: list
    inner_tail: float
    outer_tail: float
    lhs_refined: float
    weight_exponents: tuple
    proof_display_exponents: tuple
    nodes: int
    finite: bool

    @property
    def refinement_change(self) -> float:
        return abs(self.lhs_refined - self.lhs) / self.lhs if self.lhs > 0 else 0.0

    @property
    def passed(self) -> bool:
        return self.finite and self.lhs <= self.C * self.quantity * (1 + 1e-12)


def is_real(dec: Decomposition) -> bool:
    return bool(np.all(np.isreal(dec.lambdas)) and all(np.isrealobj(a.profile.values) for a in dec.atoms))


def _shell_integrals(dec, p, m_range, nodes_per_wave, order, max_nodes):
    qn = dec.qn
    star = qn.star
    b = qn.b
    ext = _support_extent(dec)
    r_ref = _reference_radius(star)
    # |F(-x)| = |F(x)| for real decompositions
    even = is_real(dec)
    out = []
    total_nodes = 0
    for m in range(m_range[0], m_range[1] + 1):
        scale = np.linalg.norm(star.power(m), 2) * r_ref
        waves = scale * ext
        panels = max(1, int(math.ceil(nodes_per_wave * waves / order)))
        angular = max(16, int(math.ceil(nodes_per_wave * (1 if even else 2) * math.pi * waves)))
        while panels * order * angular > max_nodes and (panels > 1 or angular > 16):
            panels = max(1, panels // 2)
            angular = max(16, angular // 2)
        rule = shell_rule(star, angular, panels, order, even)
        x = rule.nodes @ star.power(m).T
        F = np.abs(synthesize_F(dec, x).values)
        integral = b**m * float(shell_weight(b**m, p)) * float(np.sum(rule.weights * F**p.p_plus))
        out.append(integral)
        total_nodes += len(x)
    return out, total_nodes


def _outer_tail(dec, p, m_max) -> float:
    b = dec.qn.b
    bound = sum(abs(lam) * a.profile.l1_norm() for lam, a in dec.terms)
    ratio = b ** (p.p_plus - p.p_plus / p.p_minus)
    if ratio >= 1.0:
        raise TailDivergence(
            f"outer tail ratio b^(p_+ - p_+/p_-) = {ratio:g} >= 1; the crude bound needs p_- < 1"
        )
    def term(m):
        return (b - 1.0) * b**m * float(shell_weight(b**m, p)) * bound**p.p_plus

    # below rho = 1 the other weight branch applies; sum those shells explicitly
    m0 = m_max + 1
    start = max(m0, 0)
    return sum(term(m) for m in range(m0, start)) + term(start) / (1.0 - ratio)


def _moment_envelope(dec: Decomposition):
    # |a^(x)| <= (2 pi |x|)^{s+1} / (s+1)! * int |a(y)| |y - c|^{s+1} dy
    out = []
    for lam, a in dec.terms:
        f = a.profile
        d = np.linalg.norm(f.points() - a.ball.center_array, axis=1)
        mu = float(np.sum(np.abs(f.values).ravel() * d ** (a.s + 1)) * f.cell_volume)
        out.append((abs(lam), a.s, mu, f.l1_norm()))
    return out


def _inner_tail(dec, p, m_min, max_terms: int = 4000) -> float:
    qn = dec.qn
    star = qn.star
    b = qn.b
    r_ref = _reference_radius(star)
    env = _moment_envelope(dec)
    total = 0.0
    terms = []
    power = star.power(m_min - 1)
    a_inv_t = star.inverse_power(1)
    for i in range(max_terms):
        m = m_min - 1 - i
        R = np.linalg.norm(power, 2) * r_ref
        G = sum(
            lam * min(l1, (2 * math.pi * R) ** (s + 1) / math.factorial(s + 1) * mu)
            for lam, s, mu, l1 in env
        )
        term = (b - 1.0) * b**m * float(shell_weight(b**m, p)) * G**p.p_plus
        terms.append(term)
        total += term
        power = a_inv_t @ power
        if i >= 40 and term <= 1e-16 * total:
            ratios = np.array(terms[-20:][1:]) / np.maximum(np.array(terms[-20:][:-1]), 1e-300)
            r = float(ratios.max())
            if r < 1.0:
                return total + term * r / (1.0 - r)
            break
    raise TailDivergence("inner tail bound is not summable for these exponents and moments")


def verify_thm42(
    dec: Decomposition,
    p: Optional[ExponentFunction] = None,
    shell_range: tuple = (-4, 4),
    nodes_per_wave: float = 2.0,
    order: int = 8,
    max_nodes: int = 400_000,
    refine: bool = False,
    raise_on_failure: bool = True,
) -> Thm42Report:
    """Weighted ``L^{p_+}`` integral of ``F`` against ``min(rho*^{p_+-1-p_+/p_-}, rho*^{p_+-2})``.

    Shells ``rho*(x) = b^m`` for ``m`` in ``shell_range`` are integrated in
    polar coordinates of the reference annulus mapped by ``(A*)^m``; node
    counts follow the phase variation of ``F`` over each shell. ``lhs`` is
    the computed part, ``lhs_upper`` adds certified tail bounds: outside via
    ``|F| <= sum |lambda_j| ||a_j||_1`` and inside via the moment envelope
    ``|a_j^(x)| <= (2 pi |x|)^{s+1} int |a_j||y - c_j|^{s+1} / (s+1)!``.
    With ``refine`` the shells are repeated with twice the nodes per wave
    and reported as ``lhs_refined`` (otherwise ``nan``).

    Raises
    ------
    TailDivergence
        If a tail bound is not summable (for the outer one this means ``p_- = 1``).
    """
    p = dec.p if p is None else p
    _check_p(p)
    m_range = (int(shell_range[0]), int(shell_range[1]))
    if m_range[0] > m_range[1]:
        raise PreconditionError("empty shell range")
    shells, nodes = _shell_integrals(dec, p, m_range, nodes_per_wave, order, max_nodes)
    if refine:
        refined, _ = _shell_integrals(dec, p, m_range, 2 * nodes_per_wave, order, 4 * max_nodes)
        lhs_refined = float(np.sum(refined)) ** (1.0 / p.p_plus)
    else:
        lhs_refined = float("nan")
    outer = _outer_tail(dec, p, m_range[1])
    inner = _inner_tail(dec, p, m_range[0])
    core = float(np.sum(shells))
    pp = p.p_plus
    lhs = core ** (1.0 / pp)
    upper = (core + inner + outer) ** (1.0 / pp)
    rep = Thm42Report(
        lhs=lhs,
        lhs_upper=upper,
        quantity=dec.quantity,
        C=lhs / dec.quantity,
        C_upper=upper / dec.quantity,
        shell_range=m_range,
        shell_integrals=[float(v) for v in shells],
        inner_tail=inner,
        outer_tail=outer,
        lhs_refined=lhs_refined,
        weight_exponents=weight_exponents(p),
        proof_display_exponents=PROOF_DISPLAY_EXPONENTS,
        nodes=nodes,
        finite=bool(np.isfinite(upper)),
    )
    if not rep.passed and raise_on_failure:
        raise PropertyViolation("weighted integral is not finite", witness=rep)
    return rep


# ------------------------------------------------------------ maximal function


@dataclass(frozen=True, eq=False)
class MaximalConfig:
    """Test function ``phi`` (``int phi > 0``) and the finite window of levels."""

    phi: GriddedFunction
    k_window: tuple = (-2, 2)
    N: int = 1

    def __post_init__(self):
        if self.k_window[0] > self.k_window[1]:
            raise PreconditionError("empty k_window")
        if not self.phi.integral() > 0:
            raise PreconditionError("phi must have positive integral")


def default_phi(qn: QuasiNormEvaluator, resolution: int = 33) -> GriddedFunction:
    """Tensor bump with unit integral on a cube inscribed in ``B_0``."""
    e = qn.ellipsoid
    n = qn.n
    h = math.sqrt(e.volume_scale / (n * np.linalg.eigvalsh(e.M).max()))

    def bump(x):
        t = np.clip(np.atleast_2d(x) / h, -1.0, 1.0)
        inside = np.all(np.abs(t) < 1.0, axis=1)
        out = np.zeros(len(t))
        tt = t[inside]
        out[inside] = np.exp(np.sum(-1.0 / (1.0 - tt**2), axis=1))
        return out

    raw = GriddedFunction.from_callable(bump, -h * np.ones(n), h * np.ones(n), resolution)
    z = float(raw.integral())
    return raw.scaled(1.0 / z)


def _kernel(phi: GriddedFunction, qn: QuasiNormEvaluator, k: int, spacing: np.ndarray) -> np.ndarray:
    # phi_k(x) = b^{-k} phi(A^{-k} x), sampled at multiples of the spacing
    n = qn.n
    a_k = qn.power(k)
    corners = np.array(np.meshgrid(*[[phi.lo[i], phi.hi[i]] for i in range(n)], indexing="ij")).reshape(n, -1).T
    reach = np.abs(corners @ a_k.T).max(axis=0)
    half = np.floor(reach / spacing).astype(int)
    axes = [np.arange(-hh, hh + 1) * spacing[i] for i, hh in enumerate(half)]
    pts = np.stack([m.ravel() for m in np.meshgrid(*axes, indexing="ij")], axis=1)
    vals = phi.evaluate(pts @ qn.inverse_power(k).T).reshape([len(a) for a in axes])
    total = float(vals.sum()) * float(np.prod(spacing))
    mass = float(phi.integral())
    if total <= 0.0:
        # kernel narrower than a cell: a point mass carrying the same integral
        vals = np.zeros([len(a) for a in axes])
        vals[tuple(half)] = 1.0
        total = float(np.prod(spacing))
    return vals * (mass / total)


def _footprint(qn: QuasiNormEvaluator, k: int, spacing: np.ndarray) -> np.ndarray:
    lo, hi = qn.bounding_box(DilatedBall(np.zeros(qn.n), k))
    half = np.floor(hi / spacing).astype(int)
    axes = [np.arange(-hh, hh + 1) * spacing[i] for i, hh in enumerate(half)]
    pts = np.stack([m.ravel() for m in np.meshgrid(*axes, indexing="ij")], axis=1)
    fp = qn.in_level(pts, k).reshape([len(a) for a in axes])
    fp[tuple(half)] = True
    return fp


def _shifted(arr: np.ndarray, shift) -> np.ndarray:
    # out[i] = arr[i + shift], zero outside
    out = np.zeros_like(arr)
    src, dst = [], []
    for d, n in zip(shift, arr.shape):
        d = int(d)
        if abs(d) >= n:
            return out
        src.append(slice(max(d, 0), n + min(d, 0)))
        dst.append(slice(max(-d, 0), n - max(d, 0)))
    out[tuple(dst)] = arr[tuple(src)]
    return out


def footprint_max(values: np.ndarray, footprint: np.ndarray) -> np.ndarray:
    """``out[i] = max_{d in footprint} values[i + d - centre]`` (zero outside the array).

    The footprint must be convex along its last axis (each row one run), as
    for ellipsoids; each row costs one running-maximum pass.
    """
    centre = np.array(footprint.shape) // 2
    pad = [(int(c), int(c)) for c in centre]
    padded = np.pad(values, pad)
    best = np.zeros_like(padded)
    rows = footprint.reshape(-1, footprint.shape[-1])
    if footprint.ndim == 1:
        heads = np.zeros((1, 0), dtype=int)
    else:
        heads = np.array(np.unravel_index(np.arange(len(rows)), footprint.shape[:-1])).T
    for head, row in zip(heads, rows):
        idx = np.flatnonzero(row)
        if idx.size == 0:
            continue
        a, b = idx[0], idx[-1]
        if idx.size != b - a + 1:
            raise PreconditionError("footprint rows must be contiguous")
        w = b - a + 1
        run = maximum_filter1d(padded, size=w, axis=-1, mode="constant", cval=0.0)
        shift = list(head - centre[:-1]) + [a - centre[-1] + w // 2]
        best = np.maximum(best, _shifted(run, shift))
    return best[tuple(slice(c, c + n) for c, n in zip(centre, values.shape))]


def maximal_phi(f: GriddedFunction, cfg: MaximalConfig, qn: QuasiNormEvaluator, x_grid=None) -> GriddedFunction:
    """Truncated non-tangential maximal function with a single test function.

    ``M(x) = max_{k in window} max_{y in x + B_k} |(f * phi_k)(y)|`` with
    ``phi_k(x) = b^{-k} phi(A^{-k} x)``; ``y`` ranges over lattice points of
    ``f``'s spacing. This is a lower bound for the grand maximal function.

    The result lives on ``f``'s lattice padded by the reach of the kernels
    and balls, or is interpolated onto ``x_grid = (lo, hi, res)`` if given.
    """
    h = f.spacing
    kernels = {k: _kernel(cfg.phi, qn, k, h) for k in range(cfg.k_window[0], cfg.k_window[1] + 1)}
    prints = {k: _footprint(qn, k, h) for k in kernels}
    pad = np.zeros(f.ndim, dtype=int)
    for k in kernels:
        pad = np.maximum(pad, (np.array(kernels[k].shape) // 2) + (np.array(prints[k].shape) // 2))
    vals = np.pad(np.asarray(f.values, dtype=float), [(int(q), int(q)) for q in pad])
    lo = f.lo - pad * h
    hi = f.hi + pad * h
    cell = float(np.prod(h))
    best = np.zeros_like(vals)
    for k, ker in kernels.items():
        conv = np.abs(fftconvolve(vals, ker, mode="same")) * cell
        best = np.maximum(best, footprint_max(conv, prints[k]))
    out = GriddedFunction(lo, hi, best)
    if x_grid is None:
        return out
    glo, ghi, gres = x_grid
    return out.resampled(glo, ghi, gres)
