"""Expansive dilations, their unit-volume ellipsoid and the step quasi-norm.

The anisotropic geometry is generated by an expansive matrix ``A``: the open
ellipsoid ``Delta = {x : x^T M x < c}`` of unit volume, its dilates
``B_k = A^k Delta`` and the step quasi-norm ``rho_A(x) = b^k`` for
``x in B_{k+1} \\ B_k`` where ``b = |det A|``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import (
    ContainmentFailure,
    NotExpansive,
    PreconditionError,
    PropertyViolation,
    Singular,
    WindowExceeded,
)
from .sampling import random_directions, sphere_directions, uniform_unit_ball

DEFAULT_WINDOW = 256
DEFAULT_EPSILON = 0.01
# relative slack for "on the closed ellipsoid" checks
CLOSURE_RTOL = 1e-9


@dataclass(frozen=True, eq=False)
class Dilation:
    """Spectral data of an expansive matrix."""

    matrix: np.ndarray
    b: float
    lambda_minus: float
    lambda_plus: float
    diagonalizable: bool
    eigenvalues: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.matrix)


def _is_diagonalizable(matrix: np.ndarray, eigvals: np.ndarray) -> bool:
    n = matrix.shape[0]
    if n == 1:
        return True
    # distinct eigenvalues are sufficient
    gaps = np.abs(eigvals[:, None] - eigvals[None, :]) + np.eye(n)
    if gaps.min() > 1e-8 * max(1.0, np.abs(eigvals).max()):
        return True
    _, vecs = np.linalg.eig(matrix)
    return np.linalg.cond(vecs) < 1e8


def analyze_dilation(matrix, epsilon: float = DEFAULT_EPSILON) -> Dilation:
    """Eigen-analysis of an expansive matrix.

    Parameters
    ----------
    matrix : array_like
        Square real matrix ``A``.
    epsilon : float
        Relative slack in (0, 0.5) applied to ``lambda_-`` and ``lambda_+``
        when ``A`` is not diagonalizable over C.

    Raises
    ------
    Singular
        If ``det A == 0``.
    NotExpansive
        If some eigenvalue has modulus <= 1.
    """
    a = np.atleast_2d(np.asarray(matrix, dtype=float))
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise PreconditionError("dilation matrix must be square with n >= 1")
    if not 0.0 < epsilon < 0.5:
        raise PreconditionError("epsilon must lie in (0, 0.5)")
    if not np.all(np.isfinite(a)):
        raise PreconditionError("dilation matrix must be finite")
    det = float(np.linalg.det(a))
    if det == 0.0:
        raise Singular("dilation matrix is singular")
    eigvals = np.linalg.eigvals(a)
    mods = np.abs(eigvals)
    if mods.min() <= 1.0:
        raise NotExpansive(f"eigenvalue of modulus {mods.min():g} <= 1")
    diag = _is_diagonalizable(a, eigvals)
    if diag:
        lam_minus, lam_plus = float(mods.min()), float(mods.max())
    else:
        lam_minus = (1.0 - epsilon) * float(mods.min())
        lam_plus = (1.0 + epsilon) * float(mods.max())
        if lam_minus <= 1.0:
            # keep 1 < lambda_- < min|lambda| when the slack overshoots
            lam_minus = 0.5 * (1.0 + float(mods.min()))
    a.setflags(write=False)
    return Dilation(a, abs(det), lam_minus, lam_plus, diag, eigvals)


def unit_ball_volume(n: int) -> float:
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


@dataclass(frozen=True, eq=False)
class EllipsoidNorm:
    """``Delta = {x : x^T M x < volume_scale}`` with ``|Delta| = 1``.

    ``r`` satisfies ``Delta subset r*Delta subset A*Delta`` on the sampled
    boundary; ``n_terms`` records how many series terms built ``M``.
    """

    M: np.ndarray
    volume_scale: float
    r: float
    n_terms: int = 0
    _chol: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        if self._chol is None:
            object.__setattr__(self, "_chol", np.linalg.cholesky(self.M))

    @property
    def n(self) -> int:
        return self.M.shape[0]

    def form(self, y: np.ndarray) -> np.ndarray:
        """Row-wise quadratic form ``y^T M y``."""
        y = np.atleast_2d(y)
        return np.einsum("ni,ij,nj->n", y, self.M, y)

    @property
    def boundary_map(self) -> np.ndarray:
        """Matrix ``E`` with ``E @ u`` on the boundary of Delta for every unit ``u``."""
        return math.sqrt(self.volume_scale) * np.linalg.inv(self._chol).T

    def boundary_points(self, directions: np.ndarray) -> np.ndarray:
        return directions @ self.boundary_map.T

    def measure(self) -> float:
        n = self.n
        return unit_ball_volume(n) * self.volume_scale ** (n / 2) / math.sqrt(np.linalg.det(self.M))


def _boundary_samples(n: int, samples: int | None) -> np.ndarray:
    if samples is None:
        samples = 4096
    return sphere_directions(n, samples)


def build_ellipsoid(d: Dilation, terms: int = 500, samples: int | None = None) -> EllipsoidNorm:
    """Construct Delta from ``M = sum_j rho^{2j} (A^{-j})^T A^{-j}``.

    ``rho = (1 + lambda_-)/2``; the series stops after ``terms`` terms or once
    a term drops below 1e-15 of the running sum. ``r`` is the largest value
    below ``lambda_-`` passing the sampled check ``r*Delta subset A*Delta``.

    Raises
    ------
    ContainmentFailure
        If no ``r > 1`` passes.
    """
    if terms < 8:
        raise PreconditionError("terms must be >= 8")
    n = d.n
    rho = 0.5 * (1.0 + d.lambda_minus)
    a_inv = d.inverse
    power = np.eye(n)
    total = np.zeros((n, n))
    used = 0
    for j in range(terms + 1):
        term = rho ** (2 * j) * (power.T @ power)
        total += term
        used = j + 1
        if j >= 8 and np.linalg.norm(term) < 1e-15 * np.linalg.norm(total):
            break
        power = a_inv @ power
    total = 0.5 * (total + total.T)
    # scale so that the threshold makes |Delta| = 1
    c = (math.sqrt(np.linalg.det(total)) / unit_ball_volume(n)) ** (2.0 / n)
    probe = EllipsoidNorm(total, c, 1.0, used)

    edge = probe.boundary_points(_boundary_samples(n, samples))
    # largest r with q(A^{-1} r y) < c for boundary points y
    r_sup = float(np.min(np.sqrt(c / probe.form(edge @ a_inv.T))))
    r = min(r_sup, d.lambda_minus) * (1.0 - 1e-9)
    if r <= 1.0:
        raise ContainmentFailure(f"sampled containment only admits r <= {r_sup:g}")
    if np.any(probe.form((r * edge) @ a_inv.T) >= c):
        raise ContainmentFailure("r*Delta is not inside A*Delta on the sample set")
    return EllipsoidNorm(total, c, r, used, probe._chol)


@dataclass(frozen=True)
class DilatedBall:
    """The ball ``center + B_level``."""

    center: tuple
    level: int

    def __post_init__(self):
        object.__setattr__(self, "center", tuple(float(c) for c in np.atleast_1d(self.center)))
        object.__setattr__(self, "level", int(self.level))

    @property
    def center_array(self) -> np.ndarray:
        return np.asarray(self.center, dtype=float)


@dataclass(frozen=True)
class SigmaConstant:
    sigma: int


class QuasiNormEvaluator:
    """Step quasi-norm ``rho_A`` and dilated-ball membership for one dilation.

    Precomputes ``A^{-j}`` for ``j`` in ``[-window, window + 1]`` so the level
    search is a vectorised bisection over integer levels.
    """

    def __init__(self, dilation: Dilation, ellipsoid: EllipsoidNorm, window: int = DEFAULT_WINDOW):
        if window < 1:
            raise PreconditionError("window must be >= 1")
        self.dilation = dilation
        self.ellipsoid = ellipsoid
        self.window = int(window)
        n = dilation.n
        K = self.window
        a = dilation.matrix
        a_inv = dilation.inverse
        powers = np.empty((2 * K + 2, n, n))
        powers[K] = np.eye(n)
        for j in range(1, K + 2):
            powers[K + j] = powers[K + j - 1] @ a_inv
        for j in range(1, K + 1):
            powers[K - j] = powers[K - j + 1] @ a
        self._powers = powers
        self._star = None

    @classmethod
    def from_matrix(cls, matrix, epsilon=DEFAULT_EPSILON, window=DEFAULT_WINDOW, terms=500):
        d = analyze_dilation(matrix, epsilon)
        return cls(d, build_ellipsoid(d, terms), window)

    @property
    def n(self) -> int:
        return self.dilation.n

    @property
    def b(self) -> float:
        return self.dilation.b

    def transpose(self) -> "QuasiNormEvaluator":
        """Evaluator for ``rho_{A*}`` built from the transposed matrix."""
        d = analyze_dilation(self.dilation.matrix.T, _epsilon_of(self.dilation))
        return QuasiNormEvaluator(d, build_ellipsoid(d, max(self.ellipsoid.n_terms, 8)), self.window)

    @property
    def star(self) -> "QuasiNormEvaluator":
        """Cached :meth:`transpose`."""
        if self._star is None:
            self._star = self.transpose()
        return self._star

    def inverse_power(self, j: int) -> np.ndarray:
        if abs(j) <= self.window:
            return self._powers[self.window + j]
        return np.linalg.matrix_power(self.dilation.inverse, j) if j > 0 else np.linalg.matrix_power(
            self.dilation.matrix, -j
        )

    def power(self, j: int) -> np.ndarray:
        return self.inverse_power(-j)

    def _forms_at(self, x: np.ndarray, levels: np.ndarray) -> np.ndarray:
        mats = self._powers[levels + self.window]
        y = np.einsum("nij,nj->ni", mats, x)
        return self.ellipsoid.form(y)

    def in_level(self, x, level: int, closed: bool = False) -> np.ndarray:
        """Membership of each row of ``x`` in ``B_level``."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        q = self.ellipsoid.form(x @ self.inverse_power(level).T)
        c = self.ellipsoid.volume_scale
        return q <= c * (1 + CLOSURE_RTOL) if closed else q < c

    def contains(self, ball: DilatedBall, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return self.in_level(x - ball.center_array, ball.level)

    def levels(self, x):
        """Integer ``k`` with ``x in B_{k+1} \\ B_k``.

        Returns
        -------
        levels : ndarray of int
            Level per row (0 where ``x == 0``).
        zero : ndarray of bool
            Rows equal to the origin.
        flagged : ndarray of bool
            Rows whose level lies outside the window.
        """
        x = np.atleast_2d(np.asarray(x, dtype=float))
        N = x.shape[0]
        K = self.window
        zero = ~np.any(x != 0.0, axis=1)
        top = self._forms_at(x, np.full(N, K + 1)) < self.ellipsoid.volume_scale
        bottom = self._forms_at(x, np.full(N, -K)) < self.ellipsoid.volume_scale
        flagged = (~zero) & ((~top) | bottom)
        lo = np.full(N, -K)
        hi = np.full(N, K + 1)
        active = ~(zero | flagged)
        while True:
            todo = active & (hi - lo > 1)
            if not todo.any():
                break
            mid = (lo + hi) // 2
            inside = np.zeros(N, dtype=bool)
            inside[todo] = self._forms_at(x[todo], mid[todo]) < self.ellipsoid.volume_scale
            hi = np.where(todo & inside, mid, hi)
            lo = np.where(todo & ~inside, mid, lo)
        k = hi - 1
        k[zero] = 0
        if flagged.any():
            k[flagged & ~top] = K + 1
            k[flagged & bottom] = -K - 1
        return k, zero, flagged

    def __call__(self, x, return_flags: bool = False):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        k, zero, flagged = self.levels(x)
        values = np.power(self.b, k.astype(float))
        values[zero] = 0.0
        if flagged.any():
            warnings.warn(
                f"{int(flagged.sum())} point(s) outside the level window; using asymptotic estimate",
                WindowExceeded,
                stacklevel=2,
            )
            values[flagged] = self._asymptotic(x[flagged])
        return (values, flagged) if return_flags else values

    def _asymptotic(self, x: np.ndarray) -> np.ndarray:
        # |x| ~ rho^{ln lambda / ln b} with the comparison constant taken as 1
        d = self.dilation
        r = np.linalg.norm(x, axis=1)
        lb = math.log(d.b)
        big = r >= 1.0
        out = np.empty_like(r)
        out[big] = r[big] ** (lb / math.log(d.lambda_minus))
        out[~big] = r[~big] ** (lb / math.log(d.lambda_plus))
        return out

    def measure(self, level: int) -> float:
        """Closed-form volume of ``B_level`` from its own quadratic form."""
        p = self.inverse_power(level)
        g = p.T @ self.ellipsoid.M @ p
        n = self.n
        return unit_ball_volume(n) * self.ellipsoid.volume_scale ** (n / 2) / math.sqrt(np.linalg.det(g))

    def bounding_box(self, ball: DilatedBall) -> tuple[np.ndarray, np.ndarray]:
        a_k = self.power(ball.level)
        g_inv = a_k @ np.linalg.inv(self.ellipsoid.M) @ a_k.T
        half = np.sqrt(self.ellipsoid.volume_scale * np.diag(g_inv))
        c = ball.center_array
        return c - half, c + half

    def diameter(self, level: int) -> float:
        """Euclidean diameter of ``B_level`` (twice its largest semi-axis)."""
        a_k = self.power(level)
        g_inv = a_k @ np.linalg.inv(self.ellipsoid.M) @ a_k.T
        return 2.0 * math.sqrt(self.ellipsoid.volume_scale * np.linalg.eigvalsh(g_inv).max())

    def sample_ball(self, rng: np.random.Generator, level: int, count: int) -> np.ndarray:
        """Uniform samples in ``B_level``."""
        y = uniform_unit_ball(rng, count, self.n) @ self.ellipsoid.boundary_map.T
        return y @ self.power(level).T


def _epsilon_of(d: Dilation) -> float:
    if d.diagonalizable:
        return DEFAULT_EPSILON
    return max(1e-6, min(0.49, d.lambda_plus / float(np.abs(d.eigenvalues).max()) - 1.0))


def ball_contains(e: EllipsoidNorm, d: Dilation, ball: DilatedBall, x) -> np.ndarray:
    """True iff ``(A^{-k}(x - center))^T M (A^{-k}(x - center)) < volume_scale``."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    p = np.linalg.matrix_power(np.linalg.inv(d.matrix), ball.level)
    return e.form((x - ball.center_array) @ p.T) < e.volume_scale


def ball_measure(e: EllipsoidNorm, d: Dilation, level: int) -> float:
    return QuasiNormEvaluator(d, e, max(1, abs(level) + 1)).measure(level)


def step_quasinorm(e: EllipsoidNorm, d: Dilation, x, window: int = DEFAULT_WINDOW, return_flags=False):
    """``rho_A(x)`` for each row of ``x`` (see :class:`QuasiNormEvaluator`)."""
    return QuasiNormEvaluator(d, e, window)(x, return_flags=return_flags)


def compute_sigma(
    e: EllipsoidNorm, d: Dilation, samples: int | None = None, window: int = DEFAULT_WINDOW
) -> SigmaConstant:
    """Smallest ``sigma >= 0`` with the sampled boundary of ``2 B_0`` inside ``A^sigma B_0``.

    Boundary points are tested against the closed ball, which is the right
    test for the containment of open ellipsoids.
    """
    qn = QuasiNormEvaluator(d, e, window)
    edge = 2.0 * e.boundary_points(_boundary_samples(d.n, samples))
    for sigma in range(0, window + 1):
        if np.all(qn.in_level(edge, sigma, closed=True)):
            return SigmaConstant(sigma)
    warnings.warn("sigma search exceeded the window", WindowExceeded, stacklevel=2)
    return SigmaConstant(window + 1)


@dataclass
class ContainmentReport:
    trials: int = 0
    sum_checked: int = 0
    sum_violations: int = 0
    complement_checked: int = 0
    complement_violations: int = 0
    triangle_checked: int = 0
    triangle_violations: int = 0
    max_triangle_ratio: float = 0.0

    @property
    def passed(self) -> bool:
        return self.sum_violations == 0 and self.complement_violations == 0 and self.triangle_violations == 0


def verify_containments(
    e: EllipsoidNorm,
    d: Dilation,
    sigma: SigmaConstant,
    trials: int,
    seed: int = 0,
    level_range: tuple[int, int] = (-3, 3),
    raise_on_failure: bool = True,
) -> ContainmentReport:
    """Sample ``B_k + B_j subset B_{j+sigma}``, ``B_k + (B_{k+sigma})^c subset (B_k)^c``
    and ``rho(x+y) <= b^sigma (rho(x) + rho(y))``."""
    if trials < 0:
        raise PreconditionError("trials must be >= 0")
    report = ContainmentReport(trials=trials)
    if trials == 0:
        return report
    rng = np.random.default_rng(seed)
    qn = QuasiNormEvaluator(d, e, max(DEFAULT_WINDOW, abs(level_range[0]) + abs(level_range[1]) + sigma.sigma + 4))
    s = sigma.sigma
    n = d.n
    lo_k, hi_k = level_range

    # B_k + B_j subset B_{j+sigma}, k <= j
    ks = rng.integers(lo_k, hi_k + 1, size=trials)
    js = ks + rng.integers(0, hi_k - lo_k + 1, size=trials)
    base = uniform_unit_ball(rng, 2 * trials, n) @ e.boundary_map.T
    x = np.einsum("nij,nj->ni", qn._powers[qn.window - ks], base[:trials])
    y = np.einsum("nij,nj->ni", qn._powers[qn.window - js], base[trials:])
    ok = qn._forms_at(x + y, js + s) < e.volume_scale
    report.sum_checked = trials
    report.sum_violations = int((~ok).sum())
    if report.sum_violations and raise_on_failure:
        i = int(np.flatnonzero(~ok)[0])
        raise PropertyViolation("B_k + B_j not inside B_{j+sigma}", witness=(x[i], y[i], int(ks[i]), int(js[i])))

    # B_k + (B_{k+sigma})^c subset (B_k)^c
    ks = rng.integers(lo_k, hi_k + 1, size=trials)
    x = np.einsum("nij,nj->ni", qn._powers[qn.window - ks], uniform_unit_ball(rng, trials, n) @ e.boundary_map.T)
    t = rng.uniform(1.0 + 1e-9, 3.0, size=trials)
    u = random_directions(rng, trials, n) @ e.boundary_map.T * t[:, None]
    y = np.einsum("nij,nj->ni", qn._powers[qn.window - ks - s], u)
    outside = qn._forms_at(y, ks + s) >= e.volume_scale
    bad = outside & (qn._forms_at(x + y, ks) < e.volume_scale)
    report.complement_checked = int(outside.sum())
    report.complement_violations = int(bad.sum())
    if report.complement_violations and raise_on_failure:
        i = int(np.flatnonzero(bad)[0])
        raise PropertyViolation("B_k + complement(B_{k+sigma}) meets B_k", witness=(x[i], y[i], int(ks[i])))

    # quasi-triangle inequality at mixed scales
    kx = rng.integers(lo_k, hi_k + 1, size=trials)
    ky = rng.integers(lo_k, hi_k + 1, size=trials)
    pts = uniform_unit_ball(rng, 2 * trials, n) @ e.boundary_map.T
    x = np.einsum("nij,nj->ni", qn._powers[qn.window - kx], pts[:trials])
    y = np.einsum("nij,nj->ni", qn._powers[qn.window - ky], pts[trials:])
    lhs = qn(x + y)
    rhs = d.b**s * (qn(x) + qn(y))
    ratio = np.divide(lhs, rhs, out=np.zeros_like(lhs), where=rhs > 0)
    report.triangle_checked = trials
    report.triangle_violations = int((lhs > rhs).sum())
    report.max_triangle_ratio = float(ratio.max())
    if report.triangle_violations and raise_on_failure:
        i = int(np.argmax(ratio))
        raise PropertyViolation("quasi-triangle inequality violated", witness=(x[i], y[i], lhs[i], rhs[i]))
    return report


def comparison_sample(seed: int, samples: int, n: int, log_radius: float = 8.0) -> np.ndarray:
    """Points at log-uniform Euclidean radii; prefixes of one seed are nested."""
    rng = np.random.default_rng(seed)
    raw = rng.standard_normal((samples, n + 1))
    dirs = raw[:, :n] / np.linalg.norm(raw[:, :n], axis=1, keepdims=True)
    from scipy.stats import norm

    t = (2.0 * norm.cdf(raw[:, n]) - 1.0) * log_radius
    return dirs * np.exp(t)[:, None]


def comparison_constant(
    e: EllipsoidNorm,
    d: Dilation,
    samples: int,
    seed: int = 0,
    log_radius: float = 8.0,
    points: np.ndarray | None = None,
) -> float:
    """Smallest empirical constant ``c >= 1`` relating ``|x|`` and ``rho_A(x)``.

    For ``rho >= 1`` it requires ``rho^{a_-}/c <= |x| <= c rho^{a_+}``, for
    ``rho < 1`` it requires ``rho^{a_+}/c <= |x| <= c rho^{a_-}``, where
    ``a_(-/+) = ln lambda_(-/+) / ln b``.
    """
    if samples < 100 and points is None:
        raise PreconditionError("samples must be >= 100")
    x = comparison_sample(seed, samples, d.n, log_radius) if points is None else np.atleast_2d(points)
    qn = QuasiNormEvaluator(d, e)
    rho = qn(x)
    r = np.linalg.norm(x, axis=1)
    keep = r > 0
    rho, r = rho[keep], r[keep]
    lb = math.log(d.b)
    a_minus = math.log(d.lambda_minus) / lb
    a_plus = math.log(d.lambda_plus) / lb
    big = rho >= 1.0
    lower_exp = np.where(big, a_minus, a_plus)
    upper_exp = np.where(big, a_plus, a_minus)
    c1 = rho**lower_exp / r
    c2 = r / rho**upper_exp
    return float(max(1.0, c1.max(initial=0.0), c2.max(initial=0.0)))
