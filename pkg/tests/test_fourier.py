import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from scipy.integrate import trapezoid
from hypothesis import strategies as st

from aniso_hardy import (
    DilatedBall,
    FrequencyShells,
    GriddedFunction,
    SpectrumSample,
    constant_exponent,
    dilate,
    fourier_transform,
    lemma32_constant,
    lemma33_constant,
    make_atom,
    odd_step_atom,
    verify_commutation,
)
from aniso_hardy.exceptions import PreconditionError, ResolutionLoss
from aniso_hardy.fourier import transform_tolerance

from oracles import bump_1d, bump_nd, sinc_box, transform_direct

from conftest import evaluator


def unit_box(res=2000):
    return GriddedFunction.from_callable(lambda x: np.ones(len(x)), [-0.5], [0.5], res)


class TestTransform:
    def test_box_at_zero(self):
        assert fourier_transform(unit_box(), 0.0) == pytest.approx(1.0, abs=1e-14)

    def test_box_sinc(self):
        f = unit_box()
        xi = np.linspace(-20, 20, 81)
        tol = transform_tolerance(f, xi)
        err = np.abs(fourier_transform(f, xi) - sinc_box(xi)).max()
        assert err <= 10 * tol and err < 1e-5

    def test_matches_direct_sum_2d(self):
        rng = np.random.default_rng(0)
        f = GriddedFunction([-1.0, 0.5], [1.0, 2.0], rng.normal(size=(30, 20)))
        xi = rng.normal(size=(15, 2)) * 3
        direct = transform_direct(f.points(), f.values, f.cell_volume, xi)
        assert np.allclose(fourier_transform(f, xi), direct, rtol=1e-11, atol=1e-13)

    def test_gaussian_closed_form_2d(self):
        # exp(-pi |x|^2) is its own transform; truncation at |x| = 6 is negligible
        f = GriddedFunction.from_callable(lambda x: np.exp(-np.pi * np.sum(x * x, axis=1)), [-6, -6], [6, 6], 200)
        xi = np.random.default_rng(1).normal(size=(20, 2))
        assert np.allclose(fourier_transform(f, xi), np.exp(-np.pi * np.sum(xi * xi, axis=1)), atol=1e-12)

    def test_atom_vanishes_at_origin(self, qn2):
        a = make_atom(DilatedBall((0.4, -0.2), 1), 2.0, 1, constant_exponent(0.9), qn2, seed=3)
        assert abs(fourier_transform(a.profile, [0.0, 0.0])) <= 1e-12 * a.profile.l1_norm()

    def test_shapes(self, qn2):
        f = GriddedFunction.from_callable(bump_nd, [-1, -1], [1, 1], 16)
        assert np.ndim(fourier_transform(f, [0.1, 0.2])) == 0
        assert fourier_transform(f, np.zeros((3, 2))).shape == (3,)
        with pytest.raises(PreconditionError):
            fourier_transform(f, np.zeros((3, 3)))

    def test_spectrum_sample_lengths(self):
        with pytest.raises(ValueError):
            SpectrumSample(np.zeros((2, 1)), np.zeros(3))

    @given(st.integers(0, 1000), st.floats(-3, 3), st.floats(-3, 3))
    def test_linearity(self, seed, alpha, beta):
        rng = np.random.default_rng(seed)
        f = GriddedFunction([0.0, 0.0], [1.0, 2.0], rng.normal(size=(12, 9)))
        g = f.with_values(rng.normal(size=(12, 9)))
        xi = rng.normal(size=(8, 2)) * 4
        combo = fourier_transform(f.with_values(alpha * f.values + beta * g.values), xi)
        parts = alpha * fourier_transform(f, xi) + beta * fourier_transform(g, xi)
        assert np.allclose(combo, parts, atol=1e-12 * (1 + abs(alpha) + abs(beta)))

    @given(st.integers(0, 1000))
    def test_bounded_by_l1(self, seed):
        rng = np.random.default_rng(seed)
        f = GriddedFunction([-1.0], [1.0], rng.normal(size=64))
        xi = rng.normal(size=50) * 10
        assert np.all(np.abs(fourier_transform(f, xi)) <= f.l1_norm() * (1 + 1e-12))

    @given(st.integers(0, 1000))
    def test_conjugate_symmetry(self, seed):
        rng = np.random.default_rng(seed)
        f = GriddedFunction([-1.0, -0.5], [0.3, 1.0], rng.normal(size=(10, 11)))
        xi = rng.normal(size=(10, 2)) * 5
        assert np.allclose(fourier_transform(f, -xi), np.conj(fourier_transform(f, xi)), atol=1e-13)

    def test_parseval(self):
        f = GriddedFunction.from_callable(bump_1d, [-1], [1], 2000)
        energy = float(np.sum(f.values**2) * f.cell_volume)
        xi = np.linspace(-25, 25, 5001)
        spec = np.abs(fourier_transform(f, xi)) ** 2
        assert trapezoid(spec, xi) == pytest.approx(energy, rel=0.01)


class TestDilate:
    def test_identity(self, qn2):
        f = GriddedFunction.from_callable(bump_nd, [-1, -1], [1, 1], 16)
        assert dilate(f, qn2, 0) is f

    @pytest.mark.parametrize("name", ["2I2", "diag23", "shear"])
    def test_support_moves_to_unit_ball(self, name, quiet):
        qn = evaluator(name)
        x0, k = np.array([1.0, -0.5]), 2
        a = make_atom(DilatedBall(x0, k), math.inf, 0, constant_exponent(1.0), qn, seed=1)
        g = dilate(a.profile, qn, k, keep_density=True)
        pts = g.points()[np.abs(g.values.ravel()) > 0]
        centre = qn.inverse_power(k) @ x0
        assert len(pts) > 0
        assert np.all(qn.contains(DilatedBall(centre, 0), pts))

    @pytest.mark.parametrize("name,j", [("2I1", 2), ("2I2", -1), ("diag23", 1), ("shear", 1), ("shear", -2)])
    def test_integral_scales(self, name, j, quiet):
        qn = evaluator(name)
        n = qn.n
        f = GriddedFunction.from_callable(lambda x: bump_nd(x - 0.2), -np.ones(n), 1.5 * np.ones(n), 200 if n == 2 else 4000)
        g = dilate(f, qn, j, keep_density=True)
        assert g.integral() == pytest.approx(qn.b ** (-j) * f.integral(), rel=1e-4)

    def test_resolution_loss_warning(self, qn2):
        f = GriddedFunction.from_callable(bump_nd, [-1, -1], [1, 1], 64)
        with pytest.warns(ResolutionLoss):
            dilate(f, qn2, 1, resolution=8)

    def test_interpolated_input(self, qn_diag, quiet):
        f = GriddedFunction.from_callable(bump_nd, [-1, -1], [1, 1], 120)
        plain = GriddedFunction(f.lo, f.hi, f.values)
        g = dilate(plain, qn_diag, 1)
        exact = dilate(f, qn_diag, 1)
        assert np.abs(g.values - exact.values).max() < 0.01


class TestCommutation:
    def test_j_zero_exact(self, qn2):
        f = GriddedFunction.from_callable(bump_nd, [-1, -1], [1, 1], 32)
        rep = verify_commutation(f, qn2, 0, np.random.default_rng(0).normal(size=(10, 2)))
        assert rep.max_deviation == 0.0 and rep.passed

    def test_bump_line_j2(self, qn1):
        f = GriddedFunction.from_callable(bump_1d, [-1], [1], 2048)
        xi = np.linspace(-8, 8, 64)
        rep = verify_commutation(f, qn1, 2, xi)
        assert rep.max_deviation <= 1e-6 and rep.passed

    def test_bump_plane_diag23(self, qn_diag):
        f = GriddedFunction.from_callable(bump_nd, [-1, -1], [1, 1], 128)
        xi = np.random.default_rng(2).uniform(-3, 3, size=(40, 2))
        rep = verify_commutation(f, qn_diag, 1, xi)
        assert rep.max_deviation <= 1e-5 and rep.passed

    def test_detects_wrong_scaling(self, qn_diag):
        # a transpose mix-up (xi A^T instead of xi A) must fail for a non-symmetric A
        qn = evaluator("shear")
        f = GriddedFunction.from_callable(lambda x: bump_nd(x - [0.3, 0.0]), [-1, -1], [1.5, 1], 96)
        xi = np.random.default_rng(3).uniform(-2, 2, size=(30, 2))
        good = verify_commutation(f, qn, 1, xi)
        lhs = qn.b * fourier_transform(dilate(f, qn, 1, keep_density=True), xi @ qn.dilation.matrix.T)
        bad = np.abs(lhs - fourier_transform(f, xi)).max()
        assert good.passed and bad > 100 * (good.max_deviation + 1e-9)


class TestShells:
    @pytest.mark.parametrize("name", ["2I1", "diag23", "shear"])
    def test_points_sit_on_levels(self, name):
        star = evaluator(name).star
        sh = FrequencyShells(-3, 3, 16, 3)
        for m in range(-3, 4):
            assert np.all(star(sh.shell(star, m)) == star.b**m)

    def test_doubled(self):
        sh = FrequencyShells(-2, 2, 8, 1).doubled()
        assert (sh.directions, sh.radial, sh.m_min, sh.m_max) == (16, 2, -2, 2)


class TestShellwiseAtomConstant:
    def test_odd_step_stable(self, qn1, quiet):
        a = odd_step_atom(constant_exponent(1.0), qn1)
        xi = np.concatenate([-np.geomspace(1e-3, 20, 64), np.geomspace(1e-3, 20, 64)])
        xi2 = np.concatenate([-np.geomspace(1e-3, 20, 128), np.geomspace(1e-3, 20, 128)])
        c1 = lemma32_constant(a, qn1, (-2, 2), xi)
        c2 = lemma32_constant(a, qn1, (-2, 2), xi2)
        assert math.isfinite(c1) and abs(c2 - c1) / c1 <= 0.2

    def test_origin_excluded(self, qn1, quiet):
        a = odd_step_atom(constant_exponent(1.0), qn1)
        with_zero = lemma32_constant(a, qn1, (0, 0), np.array([0.0, 0.5, 1.0]))
        without = lemma32_constant(a, qn1, (0, 0), np.array([0.5, 1.0]))
        assert with_zero == without and math.isfinite(with_zero)

    def test_scale_invariant(self, qn_shear, quiet):
        a = make_atom(DilatedBall((0.2, 0.0), 0), 2.0, 0, constant_exponent(1.0), qn_shear, seed=5)
        sh = FrequencyShells(-3, 3, 16, 1)
        c = lemma32_constant(a, qn_shear, (-1, 1), sh)
        assert lemma32_constant(a.scaled(2.0), qn_shear, (-1, 1), sh) == pytest.approx(c, rel=1e-12)

    def test_per_level_keys(self, qn2, quiet):
        a = make_atom(DilatedBall((0.0, 0.0), 0), math.inf, 0, constant_exponent(1.0), qn2, seed=0)
        per = lemma32_constant(a, qn2, (-1, 1), FrequencyShells(-2, 2, 8, 1), per_level=True)
        assert sorted(per) == [-1, 0, 1] and all(v > 0 for v in per.values())


class TestAtomGrowthConstant:
    def test_constant_exponent_single_branch(self, qn2):
        p = constant_exponent(0.8)
        a = make_atom(DilatedBall((0.0, 0.0), 0), math.inf, 1, p, qn2, seed=2)
        sh = FrequencyShells(-4, 4, 16, 2)
        pts = sh.points(qn2.star)
        direct = np.max(np.abs(fourier_transform(a.profile, pts)) / qn2.star(pts) ** (1 / 0.8 - 1))
        assert lemma33_constant(a, qn2, p, sh) == pytest.approx(direct, rel=1e-12)

    def test_level_shift(self, qn2):
        p = constant_exponent(0.8)
        sh = FrequencyShells(-6, 6, 32, 2)
        c = [
            lemma33_constant(make_atom(DilatedBall((0.0, 0.0), k), math.inf, 1, p, qn2, seed=9), qn2, p, sh)
            for k in (0, 1)
        ]
        assert abs(c[1] - c[0]) / max(c) <= 0.3

    def test_argmax_is_moderate(self, qn2):
        p = constant_exponent(0.8)
        a = make_atom(DilatedBall((0.0, 0.0), 0), math.inf, 1, p, qn2, seed=2)
        r = lemma33_constant(a, qn2, p, FrequencyShells(-6, 6, 32, 2), details=True)
        assert 4.0**-3 <= r.argmax_rho <= 4.0**3
        assert r.value == pytest.approx(lemma33_constant(a, qn2, p, FrequencyShells(-6, 6, 32, 2)))

    def test_requires_p_plus_le_one(self, qn2):
        a = make_atom(DilatedBall((0.0, 0.0), 0), math.inf, 0, constant_exponent(1.5), qn2, seed=0)
        with pytest.raises(PreconditionError):
            lemma33_constant(a, qn2, constant_exponent(1.5), FrequencyShells(-1, 1, 4, 1))
