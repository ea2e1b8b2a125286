"""Measure representations: moments, pushforwards, symmetrization, divergence."""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from frdiag import measures as M
from frdiag.errors import DomainError


def mp1():
    return M.from_density(lambda x: np.sqrt((4.0 - x) / x) / (2 * np.pi), 0.0, 4.0)


def quarter_circle():
    return M.from_density(lambda x: np.sqrt(4.0 - x * x) / np.pi, 0.0, 2.0)


class TestConstruction:
    def test_total_mass_is_one(self):
        mu = mp1()
        assert abs(mu.total_mass - 1.0) < 1e-10

    def test_locations_strictly_increasing(self):
        mu = mp1()
        assert np.all(np.diff(mu.x) > 0)

    def test_invalid_mass_rejected(self):
        with pytest.raises(DomainError):
            M.PositiveMeasure(atom0=0.5)

    def test_negative_location_rejected(self):
        with pytest.raises(DomainError):
            M.from_atoms([(-1.0, 1.0)])

    def test_json_roundtrip(self):
        mu = M.from_atoms([(0.5, 0.25), (2.0, 0.5)], atom0=0.25)
        back = M.PositiveMeasure.from_json(mu.to_json())
        assert back.atom0 == mu.atom0
        np.testing.assert_array_equal(back.atom_x, mu.atom_x)
        np.testing.assert_array_equal(back.atom_m, mu.atom_m)


class TestMomentP:
    def test_mp1_mean_is_one(self):
        assert abs(M.moment_p(mp1(), 1.0) - 1.0) < 1e-10

    def test_unit_atom_negative_moment(self):
        # half-line representation of the symmetric two-point law
        assert M.moment_p(M.from_atoms([(1.0, 1.0)]), -2.0) == 1.0

    def test_mp1_inverse_moment_diverges(self):
        # density ~ x^{-1/2}/pi near 0 makes the x^{-3/2} integrand blow up;
        # the octave partial sums toward 0 grow by sqrt(2) per refinement
        assert M.moment_p(mp1(), -1.0) == math.inf

    def test_atom_at_zero_forces_infinity(self):
        mu = M.from_atoms([(1.0, 0.5)], atom0=0.5)
        assert M.moment_p(mu, -1.0) == math.inf

    def test_zero_moment_is_total_mass(self):
        mu = M.from_atoms([(1.0, 0.5)], atom0=0.5)
        assert abs(M.moment_p(mu, 0.0) - 1.0) < 1e-14

    def test_stochastic_order(self):
        assert M.moment_p(M.dirac(1.0), 2.0) < M.moment_p(M.dirac(2.0), 2.0)


class TestSymmetrize:
    def test_point_mass(self):
        sym = M.symmetrize(M.dirac(1.0))
        np.testing.assert_allclose(M.cdf(sym, [-2.0, -1.0, 0.0, 1.0]),
                                   [0.0, 0.5, 0.5, 1.0], atol=1e-15)

    def test_delta_zero_fixed(self):
        sym = M.symmetrize(M.dirac(0.0))
        np.testing.assert_allclose(M.cdf(sym, [-0.5, 0.0, 0.5]),
                                   [0.0, 1.0, 1.0], atol=1e-15)

    def test_sqrt_mp1_symmetrized_is_semicircle(self):
        # oracle: the closed-form semicircle CDF on a 1000-point grid
        sym = M.symmetrize(M.sqrt_pushforward(mp1()))
        xs = np.linspace(-1.999, 1.999, 1000)
        target = 0.5 + xs * np.sqrt(4 - xs ** 2) / (4 * np.pi) + np.arcsin(xs / 2) / np.pi
        np.testing.assert_allclose(M.cdf(sym, xs), target, atol=1e-10)

    def test_odd_integrand_vanishes_by_construction(self):
        sym = M.symmetrize(mp1())
        # the representation stores only the half, so an odd function never
        # enters any integral; the even integral matches the half-line one
        assert sym.even_integral(lambda t: t * t) == pytest.approx(
            M.moment_p(mp1(), 2.0), rel=1e-14)

    def test_even_moment_matches_half_line_moment(self):
        mu = mp1()
        sym = M.symmetrize(mu)
        for p in (2.0, 4.0):
            assert sym.even_integral(lambda t, p=p: t ** p) == pytest.approx(
                M.moment_p(mu, p), rel=1e-13)


class TestPushforwards:
    def test_point_mass_square(self):
        sq = M.square_pushforward(M.dirac(2.0))
        assert sq.atom_x[0] == 4.0 and sq.atom_m[0] == 1.0

    def test_roundtrip_is_nodewise_identity(self):
        mu = quarter_circle()
        back = M.sqrt_pushforward(M.square_pushforward(mu))
        np.testing.assert_allclose(back.x, mu.x, rtol=1e-14)
        np.testing.assert_allclose(back.f, mu.f, rtol=1e-12)
        np.testing.assert_allclose(back.w, mu.w, rtol=1e-12)

    def test_quarter_circle_squares_to_mp1(self):
        # oracle: CDF comparison on a grid at 1e-8
        sq = M.square_pushforward(quarter_circle())
        grid = np.linspace(1e-3, 3.999, 1000)
        np.testing.assert_allclose(M.cdf(sq, grid), M.cdf(mp1(), grid), atol=1e-8)

    def test_mass_conserved(self):
        sq = M.square_pushforward(quarter_circle())
        assert abs(sq.total_mass - 1.0) < 1e-10
        assert abs(M.sqrt_pushforward(sq).total_mass - 1.0) < 1e-10


class TestLogPlus:
    def test_unit_atom(self):
        assert M.log_plus_integral(M.dirac(1.0)) == 0.0

    def test_atom_at_e(self):
        assert M.log_plus_integral(M.dirac(math.e)) == pytest.approx(1.0, abs=1e-15)

    def test_heavy_tail_density_reported_finite(self):
        # 1/(x log^2 x) on [e, inf): the tail contribution decays like
        # 1/log(x) per octave, below the growth threshold of the detector,
        # so the truncated representation reports a finite value
        heavy = M.from_density(lambda x: (1.0 / x) / np.log(x) ** 2, math.e,
                               math.inf, tail="exp", renormalize=True)
        assert math.isfinite(M.log_plus_integral(heavy))

    def test_doubling_atoms_diverge(self):
        # masses 2^-n at exp(2^n) contribute 1 apiece: linear partial sums
        atoms = [(math.exp(2.0 ** n), 2.0 ** -n) for n in range(1, 10)]
        mu = M.from_atoms(atoms, atom0=1.0 - sum(m for _, m in atoms))
        assert M.log_plus_integral(mu) == math.inf


class TestCDF:
    def test_matches_quadrature_oracle(self):
        mu = mp1()
        pts = [0.1, 0.5, 1.0, 2.0, 3.9]
        oracle = [quad(lambda t: np.sqrt((4 - t) / t) / (2 * np.pi), 0, p,
                       points=[0])[0] for p in pts]
        np.testing.assert_allclose(M.cdf(mu, pts), oracle, atol=1e-10)

    def test_half_cauchy_median(self):
        hc = M.from_density(lambda x: 2.0 / (np.pi * (1 + x * x)), 0.0,
                            math.inf, scale=1.0)
        assert M.cdf(hc, [1.0])[0] == pytest.approx(0.5, abs=1e-10)


class TestAbsSqPushforward:
    def test_two_point_law_at_zero(self):
        law = M.real_from_atoms([(-1.0, 0.5), (1.0, 0.5)])
        out = M.abs_sq_pushforward(law, 0.0)
        assert out.atom_x.tolist() == [1.0]
        assert out.atom_m.tolist() == [1.0]

    def test_shift_by_three(self):
        law = M.real_from_atoms([(-1.0, 0.5), (1.0, 0.5)])
        out = M.abs_sq_pushforward(law, 3.0)
        np.testing.assert_allclose(out.atom_x, [4.0, 16.0])
        assert M.moment_p(out, -1.0) == pytest.approx(0.5 / 4 + 0.5 / 16)

    def test_atom_hit_moves_to_kernel(self):
        law = M.real_from_atoms([(-1.0, 0.5), (1.0, 0.5)])
        out = M.abs_sq_pushforward(law, 1.0)
        assert out.atom0 == 0.5
