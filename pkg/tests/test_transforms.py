"""Analytic transforms: G/F, the S-transform, and the Voiculescu transform."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from frdiag import measures as M, models as MD, transforms as T
from frdiag.errors import DegenerateMeasure, DomainError


def G_semicircle(z, t=1.0):
    # closed form with the branch fixed by G ~ 1/z at infinity
    z = complex(z)
    return (z - z * np.sqrt(1 - 4 * t / (z * z))) / (2 * t)


class TestTransformGF:
    def test_semicircle_at_i(self):
        G, F = T.transform_GF(MD.semicircle_symmetric(1.0), 1j)
        assert abs(G - (-1j * (math.sqrt(5) - 1) / 2)) < 1e-10
        assert abs(G - G_semicircle(1j)) < 1e-10

    def test_point_mass(self):
        G, _ = T.transform_GF(M.dirac(0.0), 2.0 + 1j)
        assert G == 1.0 / (2.0 + 1j)

    def test_arcsine_at_i(self):
        G, _ = T.transform_GF(MD.arcsine_symmetric(), 1j)
        assert abs(G - (-1j / math.sqrt(5))) < 1e-12

    def test_rejects_lower_half_plane(self):
        with pytest.raises(DomainError):
            T.transform_GF(M.dirac(1.0), 1.0 - 0.5j)

    def test_G_maps_into_lower_half_plane(self):
        rng = np.random.default_rng(1)
        zs = rng.uniform(-4, 4, 100) + 1j * rng.uniform(0.05, 3.0, 100)
        for mu in (MD.semicircle_symmetric(1.0), MD.marchenko_pastur_one()):
            G, F = T.transform_GF(mu, zs)
            assert np.all(G.imag < 0)
            assert np.all(F.imag >= zs.imag - 1e-12)


class TestGImagModulus:
    def test_unit_atom(self):
        assert T.g_imag_modulus(M.dirac(1.0), 1.0) == 0.5

    def test_total_mass_asymptotics(self):
        g = T.g_imag_modulus(MD.marchenko_pastur_one(), 100.0)
        assert abs(100.0 * g - 1.0) < 1e-3

    def test_two_routes_agree(self):
        # resolvent form against the Cauchy transform of the symmetrized
        # square root pushforward; quadrature oracle pins the shared value
        mu = MD.marchenko_pastur_one()
        direct = T.g_imag_modulus(mu, 1.0)
        sym = M.symmetrize(M.sqrt_pushforward(mu))
        viaG = -T.transform_GF(sym, 1j)[0].imag
        oracle = quad(lambda t: np.sqrt((4 - t) / t) / (2 * np.pi * (1 + t)),
                      0, 4, points=[0])[0]
        assert abs(direct - viaG) < 1e-10
        assert abs(direct - oracle) < 1e-8

    def test_decreasing_at_large_heights(self):
        mu = MD.marchenko_pastur_one()
        g10, g100, g1000 = (T.g_imag_modulus(mu, y) for y in (10., 100., 1000.))
        assert g10 > g100 > g1000
        assert abs(1000.0 * g1000 - 1.0) < 1e-5


class TestSTransform:
    def test_mp1(self):
        # S(u) = 1/(1+u) for the squared circular modulus
        assert T.s_transform(MD.marchenko_pastur_one(), -0.5) == pytest.approx(
            2.0, abs=1e-10)

    def test_point_mass(self):
        for u in (-0.2, -0.5, -0.9):
            assert T.s_transform(M.dirac(3.0), u) == pytest.approx(1 / 3, abs=1e-12)

    def test_circular_cauchy_square(self):
        assert T.s_transform(MD.xmk_mu_sq(1, 1), -0.5) == pytest.approx(
            1.0, abs=1e-8)

    def test_degenerate_rejected(self):
        with pytest.raises(DegenerateMeasure):
            T.s_transform(M.dirac(0.0), -0.5)

    def test_multiplicativity_on_product_law(self):
        # S of the two-factor product law equals the square of the base S
        mu = MD.xmk_mu_sq(2, 0)
        for u in np.linspace(-0.9, -0.05, 20):
            assert T.s_transform(mu, u) == pytest.approx(1.0 / (1 + u) ** 2,
                                                         rel=1e-8)


class TestSLimit:
    def test_point_mass(self):
        assert T.s_limit_at_minus_one(M.dirac(2.0)) == pytest.approx(0.5, abs=1e-9)

    def test_mp1_diverges(self):
        assert T.s_limit_at_minus_one(MD.marchenko_pastur_one()) == math.inf

    def test_uniform_on_1_2(self):
        # oracle: the inverse moment integral log(2) by direct quadrature
        uni = M.from_density(lambda x: np.ones_like(x), 1.0, 2.0)
        oracle = quad(lambda x: 1.0 / x, 1, 2)[0]
        assert T.s_limit_at_minus_one(uni) == pytest.approx(oracle, abs=1e-6)

    def test_kernel_rejected(self):
        with pytest.raises(DomainError):
            T.s_limit_at_minus_one(M.from_atoms([(1.0, 0.5)], atom0=0.5))


class TestPhiImagAxis:
    def test_semicircle(self):
        # phi(z) = t/z gives phihat(v) = -t/v
        assert T.phi_imag_axis(MD.semicircle_symmetric(1.0), 2.0) == pytest.approx(
            -0.5, abs=1e-10)

    def test_cauchy_constant(self):
        for v in (1.5, 3.0, 10.0):
            assert T.phi_imag_axis(MD.cauchy_symmetric(1.0), v) == pytest.approx(
                -1.0, abs=1e-10)

    def test_two_point_tangency(self):
        # f(y) = (y^2+1)/y has minimum 2 at y = 1; hand inversion gives -1
        assert T.phi_imag_axis(M.symmetric_point(1.0), 2.0) == pytest.approx(
            -1.0, abs=1e-6)

    def test_two_point_regular(self):
        # largest root of (y^2+1)/y = 3 is (3+sqrt(5))/2
        got = T.phi_imag_axis(M.symmetric_point(1.0), 3.0)
        assert got == pytest.approx((3 + math.sqrt(5)) / 2 - 3, abs=1e-12)

    def test_below_range_raises(self):
        with pytest.raises(DomainError):
            T.phi_imag_axis(MD.semicircle_symmetric(1.0), 0.5)


class TestPhiFromPair:
    def test_semicircle_pair(self):
        pair = MD.semicircle_pair(1.0)
        assert abs(T.phi_from_pair(pair, 2j) - 1 / 2j) < 1e-14

    def test_cauchy_pair_partial_fractions(self):
        # oracle: the partial-fraction integral evaluates to -i at 2i
        pair = MD.cauchy_pair(1.0)
        re = quad(lambda s: ((1 + 2j * s) / (2j - s)).real / (np.pi * (1 + s * s)),
                  -np.inf, np.inf)[0]
        im = quad(lambda s: ((1 + 2j * s) / (2j - s)).imag / (np.pi * (1 + s * s)),
                  -np.inf, np.inf)[0]
        got = T.phi_from_pair(pair, 2j)
        assert abs(got - complex(re, im)) < 1e-8
        assert abs(got - (-1j)) < 1e-8

    def test_gamma_only(self):
        assert T.phi_from_pair(T.GeneratingPair(3.0, None, 0.0), 1j) == 3.0

    def test_nevanlinna_property(self):
        rng = np.random.default_rng(7)
        zs = rng.uniform(-5, 5, 100) + 1j * rng.uniform(0.05, 4.0, 100)
        for pair in (MD.semicircle_pair(1.0), MD.cauchy_pair(2.0)):
            assert np.all(T.phi_from_pair(pair, zs).imag <= 1e-10)

    def test_axis_consistency_with_inversion(self):
        for mu, pair in ((MD.semicircle_symmetric(1.0), MD.semicircle_pair(1.0)),
                         (MD.cauchy_symmetric(1.0), MD.cauchy_pair(1.0))):
            for v in (2.0, 3.5, 8.0):
                assert T.phi_imag_axis(mu, v) == pytest.approx(
                    T.phi_hat_from_pair(pair, v), abs=1e-8)


class TestRImag:
    def test_semicircle_linear(self):
        for y in (0.3, 1.0, 4.0):
            assert T.r_imag(MD.semicircle_pair(1.0), y) == pytest.approx(y, abs=1e-10)

    def test_cauchy_constant(self):
        assert T.r_imag(MD.cauchy_pair(1.0), 5.0) == pytest.approx(1.0, abs=1e-10)

    def test_free_stable_power(self):
        phih = MD.model_transforms(MD.SymFreeStable(3, 1.0)).phi_imag
        assert T.r_imag(phih, 4.0) == pytest.approx(0.5, abs=1e-14)

    def test_from_measure(self):
        assert T.r_imag(MD.semicircle_symmetric(1.0), 0.7) == pytest.approx(
            0.7, abs=1e-10)
