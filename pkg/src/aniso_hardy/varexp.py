"""Variable exponents, the modular and the Luxemburg quasi-norm on grids."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .dilation import DilatedBall, QuasiNormEvaluator
from .exceptions import NonConvergence, PreconditionError, PropertyViolation
from .grid import GriddedFunction

# tolerance for declared essential bounds against grid samples
BOUNDS_ATOL = 1e-12


@dataclass(frozen=True, eq=False)
class ExponentFunction:
    """A variable exponent ``p(.)`` with declared bounds and log-Hölder constants.

    ``p_minus``/``p_plus`` are the declared essential infimum/supremum (they
    cannot be recovered from samples); :meth:`check_bounds` cross-checks them.
    ``C_log`` and ``C_infty`` may be ``None`` when undeclared.
    """

    evaluator: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    p_minus: float
    p_plus: float
    p_infty: float
    C_log: Optional[float] = None
    C_infty: Optional[float] = None
    spec: str = ""

    def __post_init__(self):
        if not 0.0 < self.p_minus <= self.p_plus < math.inf:
            raise PreconditionError(f"need 0 < p_- <= p_+ < inf, got {self.p_minus}, {self.p_plus}")

    @property
    def p_underline(self) -> float:
        return min(self.p_minus, 1.0)

    @property
    def is_constant(self) -> bool:
        return self.p_minus == self.p_plus

    def __call__(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.broadcast_to(np.asarray(self.evaluator(x), dtype=float), (x.shape[0],)).copy()

    def check_bounds(self, x) -> None:
        vals = self(x)
        if vals.min() < self.p_minus - BOUNDS_ATOL or vals.max() > self.p_plus + BOUNDS_ATOL:
            raise PropertyViolation(
                f"exponent samples in [{vals.min():g}, {vals.max():g}] escape declared "
                f"[{self.p_minus:g}, {self.p_plus:g}]"
            )

    def scaled(self, r: float) -> "ExponentFunction":
        """The exponent ``r * p(.)``."""
        inner = self.evaluator
        return ExponentFunction(
            lambda x: r * inner(x),
            r * self.p_minus,
            r * self.p_plus,
            r * self.p_infty,
            None if self.C_log is None else r * self.C_log,
            None if self.C_infty is None else r * self.C_infty,
            f"{r:g}*({self.spec})",
        )


def constant_exponent(p0: float) -> ExponentFunction:
    p0 = float(p0)
    return ExponentFunction(lambda x: np.full(len(x), p0), p0, p0, p0, 0.0, 0.0, f"constant:{p0:g}")


def log_smooth_exponent(
    p_infty: float,
    c: float,
    gauge: Optional[Callable[[np.ndarray], np.ndarray]] = None,
    C_log: Optional[float] = None,
    C_infty: Optional[float] = None,
) -> ExponentFunction:
    """``p(x) = p_infty + c / log(e + g(x))`` with gauge ``g`` (Euclidean norm by default).

    The log-Hölder checks measure decay against ``rho_A``; when that
    quasi-norm is passed as the gauge the decay constant is exactly ``|c|``
    and is declared automatically. Otherwise ``C_infty`` (like ``C_log``) is
    left to the caller.
    """
    p_infty, c = float(p_infty), float(c)
    g = gauge if gauge is not None else (lambda x: np.linalg.norm(x, axis=1))
    if C_infty is None and gauge is not None:
        C_infty = abs(c)

    def p(x):
        return p_infty + c / np.log(math.e + g(x))

    lo, hi = (p_infty, p_infty + c) if c >= 0 else (p_infty + c, p_infty)
    return ExponentFunction(p, lo, hi, p_infty, C_log, C_infty, f"log-smooth:{p_infty:g},{c:g}")


def step_exponent(p_left: float, p_right: float, threshold: float = 0.0, axis: int = 0, C_log=None) -> ExponentFunction:
    """``p_left`` for ``x[axis] <= threshold`` and ``p_right`` beyond (not log-Hölder)."""
    p_left, p_right = float(p_left), float(p_right)

    def p(x):
        return np.where(x[:, axis] > threshold, p_right, p_left)

    return ExponentFunction(
        p, min(p_left, p_right), max(p_left, p_right), p_right, C_log, None,
        f"step:{p_left:g},{p_right:g},{threshold:g}",
    )


def parse_exponent(spec: str, gauge=None) -> ExponentFunction:
    """Parse ``constant:P``, ``log-smooth:PINF,C`` or ``step:PL,PR[,T]``."""
    try:
        kind, _, args = spec.partition(":")
        nums = [float(v) for v in args.split(",")] if args else []
        kind = kind.strip().lower()
        if kind == "constant" and len(nums) == 1:
            return constant_exponent(nums[0])
        if kind == "log-smooth" and len(nums) == 2:
            return log_smooth_exponent(nums[0], nums[1], gauge)
        if kind == "step" and len(nums) in (2, 3):
            return step_exponent(*nums)
    except ValueError as exc:
        raise PreconditionError(f"bad exponent spec {spec!r}: {exc}") from exc
    raise PreconditionError(f"bad exponent spec {spec!r}")


@dataclass
class LogHolderReport:
    pairs: int
    max_ratio_local: float
    max_ratio_infinity: float
    # smallest constants consistent with the samples
    min_C_log: float
    min_C_infty: float
    passed: bool


def check_log_holder(
    p: ExponentFunction,
    qn: QuasiNormEvaluator,
    pairs: int,
    seed: int = 0,
    scale: float = 4.0,
    extra_pairs: Optional[tuple[np.ndarray, np.ndarray]] = None,
    raise_on_failure: bool = True,
) -> LogHolderReport:
    """Sample both log-Hölder inequalities with the quasi-norm ``qn``.

    Pairs are drawn with separations spanning many scales so the local
    condition is probed near the diagonal. Ratios are LHS over RHS using the
    declared constants (0 when a constant is undeclared and the LHS vanishes).
    """
    if pairs < 1:
        raise PreconditionError("pairs must be >= 1")
    rng = np.random.default_rng(seed)
    n = qn.n
    x = rng.uniform(-scale, scale, size=(pairs, n))
    step = rng.standard_normal((pairs, n)) * np.exp(rng.uniform(-12, 1, size=(pairs, 1)))
    y = x + step
    if extra_pairs is not None:
        ex, ey = (np.atleast_2d(np.asarray(v, dtype=float)) for v in extra_pairs)
        x, y = np.vstack([x, ex]), np.vstack([y, ey])
    far = np.vstack([x, rng.standard_normal((pairs, n)) * np.exp(rng.uniform(0, 12, size=(pairs, 1)))])

    diff = np.abs(p(x) - p(y))
    rho = qn(x - y)
    with np.errstate(divide="ignore"):
        local_w = np.log(math.e + np.where(rho > 0, 1.0 / np.where(rho > 0, rho, 1.0), np.inf))
    need_local = np.where(diff > 0, diff * local_w, 0.0)
    inf_w = np.log(math.e + qn(far))
    need_inf = np.abs(p(far) - p.p_infty) * inf_w

    min_c_log = float(need_local.max())
    min_c_inf = float(need_inf.max())

    def ratio(need, const):
        if const is None:
            return 0.0 if need.max() == 0 else math.inf
        if const == 0:
            return 0.0 if need.max() == 0 else math.inf
        return float(need.max() / const)

    r_local = ratio(need_local, p.C_log)
    r_inf = ratio(need_inf, p.C_infty)
    report = LogHolderReport(len(x), r_local, r_inf, min_c_log, min_c_inf, r_local <= 1.0 and r_inf <= 1.0)
    if not report.passed and raise_on_failure:
        i = int(np.argmax(need_local))
        raise PropertyViolation(
            f"log-Hölder condition fails (local ratio {r_local:g}, decay ratio {r_inf:g})",
            witness=(x[i], y[i]),
        )
    return report


def _log_terms(f: GriddedFunction, p: ExponentFunction):
    mag = np.abs(f.values).ravel()
    nz = mag > 0
    pts = f.points()[nz]
    return np.log(mag[nz]), p(pts)


def modular(f: GriddedFunction, p: ExponentFunction) -> float:
    """Midpoint rule for ``int |f(x)|^{p(x)} dx`` over the grid box."""
    logm, expo = _log_terms(f, p)
    return float(np.sum(np.exp(expo * logm)) * f.cell_volume)


def luxemburg_norm(f: GriddedFunction, p: ExponentFunction, tol: float = 1e-10, max_doublings: int = 200) -> float:
    """``inf{lam > 0 : modular(f/lam) <= 1}``.

    Brackets from ``lam = 1`` by doubling/halving, bisects to relative width
    ``tol``, then polishes with Newton steps on ``u -> log modular(f e^{-u})``
    (convex and decreasing), so the result is accurate well below ``tol`` and
    exactly positively homogeneous up to rounding.

    Raises
    ------
    NonConvergence
        If no bracket is found within ``max_doublings`` doublings.
    """
    if not 0.0 < tol <= 1e-3:
        raise PreconditionError("tol must lie in (0, 1e-3]")
    logm, expo = _log_terms(f, p)
    if logm.size == 0:
        return 0.0
    dv = f.cell_volume
    # work relative to the largest sample to keep exponents tame
    shift = float(logm.max())
    ell = logm - shift

    def rho_u(u):
        return float(np.sum(np.exp(expo * (ell - u))) * dv)

    lo, hi = 0.0, 0.0  # in u = log(lam) - shift
    if rho_u(0.0) > 1.0:
        for _ in range(max_doublings):
            hi += math.log(2.0)
            if rho_u(hi) <= 1.0:
                break
        else:
            raise NonConvergence("no upper bracket for the Luxemburg norm")
        lo = hi - math.log(2.0)
    else:
        for _ in range(max_doublings):
            lo -= math.log(2.0)
            if rho_u(lo) > 1.0:
                break
        else:
            raise NonConvergence("no lower bracket for the Luxemburg norm")
        hi = lo + math.log(2.0)

    # bisection on lam itself; relative width tol
    lam_lo, lam_hi = math.exp(lo), math.exp(hi)
    while lam_hi - lam_lo > tol * lam_hi:
        mid = 0.5 * (lam_lo + lam_hi)
        if rho_u(math.log(mid)) > 1.0:
            lam_lo = mid
        else:
            lam_hi = mid
    u = math.log(lam_hi)

    for _ in range(30):
        w = np.exp(expo * (ell - u)) * dv
        s = float(np.sum(w))
        phi = math.log(s)
        dphi = -float(np.sum(expo * w)) / s
        step = phi / dphi
        u_new = u - step
        if not math.log(lam_lo) - 1e-12 <= u_new <= math.log(lam_hi) + 1e-12:
            break
        u = u_new
        if abs(step) < 4e-16 * max(1.0, abs(u)):
            break
    return math.exp(u + shift)


def indicator(grid: GriddedFunction | tuple, qn: QuasiNormEvaluator, ball: DilatedBall, height: float = 1.0) -> GriddedFunction:
    """Midpoint-membership indicator of ``ball`` on a grid given as a function or ``(lo, hi, res)``."""
    if isinstance(grid, GriddedFunction):
        lo, hi, res = grid.lo, grid.hi, grid.resolution
    else:
        lo, hi, res = grid
    tmpl = GriddedFunction.from_callable(lambda x: np.zeros(len(x)), lo, hi, res)
    inside = qn.contains(ball, tmpl.points()).reshape(tmpl.resolution)

    def func(x):
        return height * qn.contains(ball, x).astype(float)

    return tmpl.with_values(height * inside.astype(float), func)


def char_ball_norm(
    ball: DilatedBall,
    p: ExponentFunction,
    qn: QuasiNormEvaluator,
    tol: float = 1e-10,
    resolution: int | tuple = 256,
) -> float:
    """``||chi_ball||_{L^{p(.)}}`` on a grid over the ball's bounding box."""
    lo, hi = qn.bounding_box(ball)
    chi = indicator((lo, hi, _res(resolution, qn.n)), qn, ball)
    if not np.any(chi.values):
        raise PreconditionError("grid too coarse: no cell midpoint inside the ball")
    return luxemburg_norm(chi, p, tol)


def _res(resolution, n):
    return (int(resolution),) * n if np.isscalar(resolution) else tuple(resolution)


@dataclass
class Remark21Report:
    power_identity_error: float
    homogeneity_error: float
    quasi_triangle_slack: float
    modular_vs_norm: Optional[tuple[float, float]]
    passed: bool


def verify_remark21(
    p: ExponentFunction,
    f: GriddedFunction,
    g: GriddedFunction,
    r: float,
    mu: complex = -3.0,
    rtol: float = 1e-6,
    raise_on_failure: bool = True,
) -> Remark21Report:
    """Check the power identity, homogeneity, the ``p_underline`` quasi-triangle
    inequality and the modular bound for ``||f|| <= 1``.

    The modular bound is ``modular(f) <= ||f||^{p_underline}``: this is
    ``modular(f) <= ||f||`` when ``p_- >= 1``; for ``p_- < 1`` only the weaker
    ``||f||^{p_-}`` holds (``f = c chi_E`` with small ``c`` is a counterexample).
    """
    if r <= 0:
        raise PreconditionError("r must be > 0")
    if f.resolution != g.resolution or not (np.allclose(f.lo, g.lo) and np.allclose(f.hi, g.hi)):
        raise PreconditionError("f and g must share one grid")
    nf = luxemburg_norm(f, p)
    lhs = luxemburg_norm(f.with_values(np.abs(f.values) ** r), p)
    rhs = luxemburg_norm(f, p.scaled(r)) ** r
    power_err = abs(lhs - rhs) / max(abs(rhs), 1e-300)

    hom = luxemburg_norm(f.with_values(mu * f.values), p)
    hom_err = abs(hom - abs(mu) * nf) / max(abs(mu) * nf, 1e-300)

    pu = p.p_underline
    ng = luxemburg_norm(g, p)
    nsum = luxemburg_norm(f.with_values(f.values + g.values), p)
    slack = nf**pu + ng**pu - nsum**pu

    mod_pair = None
    mod_ok = True
    if nf <= 1.0:
        m = modular(f, p)
        mod_pair = (m, nf)
        mod_ok = m <= nf**pu * (1 + rtol)

    passed = power_err <= rtol and hom_err <= rtol and slack >= -rtol * max(nsum**pu, 1e-300) and mod_ok
    report = Remark21Report(power_err, hom_err, slack, mod_pair, passed)
    if not passed and raise_on_failure:
        raise PropertyViolation("Luxemburg norm identity failed", witness=report)
    return report
