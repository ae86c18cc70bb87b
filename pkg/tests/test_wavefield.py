import warnings

import numpy as np
import pytest
from scipy.integrate import IntegrationWarning, quad

from pilotlattice import (
    SlitGeometry,
    aperture_mask,
    boundary_weight_ratio,
    double_slit_amplitude,
    fresnel_c,
    fresnel_s,
    line_distribution,
    make_grid,
    single_slit_amplitude,
)

# Values computed once by adaptive quadrature of the defining integrands
# (cos(pi t^2 / 2), sin(pi t^2 / 2)) to 1e-13 absolute.
C1_ORACLE = 0.7798934003768228
S1_ORACLE = 0.4382591473903548


def quad_c(u: float) -> float:
    # roundoff warnings at large |u| are expected; the estimates stay well
    # inside the 1e-10 budget
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        val, _ = quad(lambda t: np.cos(np.pi * t * t / 2), 0.0, u,
                      limit=4000, epsabs=1e-13, epsrel=1e-13)
    return val


def quad_s(u: float) -> float:
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        val, _ = quad(lambda t: np.sin(np.pi * t * t / 2), 0.0, u,
                      limit=4000, epsabs=1e-13, epsrel=1e-13)
    return val


class TestFresnelIntegrals:
    def test_zero(self):
        assert fresnel_c(0.0) == 0.0
        assert fresnel_s(0.0) == 0.0

    def test_odd_symmetry(self):
        u = 1.3
        assert fresnel_c(-u) == -fresnel_c(u)
        assert fresnel_s(-u) == -fresnel_s(u)

    def test_frozen_anchor_values(self):
        assert fresnel_c(1.0) == pytest.approx(C1_ORACLE, abs=1e-10)
        assert fresnel_s(1.0) == pytest.approx(S1_ORACLE, abs=1e-10)
        # spot anchors at the published 7-digit precision
        assert fresnel_c(1.0) == pytest.approx(0.7798934, abs=1e-6)
        assert fresnel_s(1.0) == pytest.approx(0.4382591, abs=1e-6)

    def test_against_quadrature(self):
        rng = np.random.default_rng(11)
        us = np.concatenate([rng.uniform(-50, 50, 40), [0.5, -2.0, 10.0, 49.5]])
        for u in us:
            assert abs(fresnel_c(u) - quad_c(u)) <= 1e-10
            assert abs(fresnel_s(u) - quad_s(u)) <= 1e-10

    def test_asymptotic_limit(self):
        assert abs(fresnel_c(50.0) - 0.5) < 1e-2
        assert abs(fresnel_s(50.0) - 0.5) < 1e-2

    def test_envelope_decays_inversely(self):
        # oscillation amplitude around 1/2 shrinks like 1/(pi u)
        u10 = np.linspace(9.5, 10.5, 4001)
        u50 = np.linspace(49.5, 50.5, 4001)
        env10 = np.abs(fresnel_c(u10) - 0.5).max()
        env50 = np.abs(fresnel_c(u50) - 0.5).max()
        assert env10 == pytest.approx(1 / (np.pi * 10), rel=0.1)
        assert 3.0 < env10 / env50 < 7.0

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            fresnel_c(np.nan)
        with pytest.raises(ValueError):
            fresnel_s(np.inf)
        with pytest.raises(ValueError):
            fresnel_c(np.array([1.0, -np.inf]))

    def test_vectorized(self):
        u = np.array([0.0, 1.0, -1.0])
        c = fresnel_c(u)
        assert c.shape == (3,)
        assert c[1] == -c[2]


class TestSlitGeometry:
    def test_single_slit(self):
        g = SlitGeometry(width=1e-4)
        assert g.centers == (0.0,)

    def test_double_slit_centers(self):
        g = SlitGeometry(width=1e-4, separation=3e-4)
        assert g.centers == (-1.5e-4, 1.5e-4)

    def test_overlapping_slits_rejected(self):
        with pytest.raises(ValueError):
            SlitGeometry(width=2e-4, separation=1e-4)
        with pytest.raises(ValueError):
            SlitGeometry(width=0.0)


class TestSingleSlitAmplitude:
    GEOM = SlitGeometry(width=0.1e-3)
    LAM = 700e-9

    def test_center_combines_opposite_arguments(self):
        y = 0.01
        u = np.sqrt(2 / (self.LAM * y)) * (self.GEOM.width / 2)
        psi = single_slit_amplitude(0.0, y, self.GEOM, self.LAM)
        expected = 2.0 * abs(complex(fresnel_c(u), fresnel_s(u)))
        assert abs(psi) == pytest.approx(expected, rel=1e-12)

    def test_mirror_symmetry(self):
        rng = np.random.default_rng(3)
        x = rng.uniform(-1e-3, 1e-3, 64)
        a = np.abs(single_slit_amplitude(x, 0.01, self.GEOM, self.LAM))
        b = np.abs(single_slit_amplitude(-x, 0.01, self.GEOM, self.LAM))
        assert np.array_equal(a, b)

    def test_rejects_bad_plane_or_wavelength(self):
        with pytest.raises(ValueError):
            single_slit_amplitude(0.0, 0.0, self.GEOM, self.LAM)
        with pytest.raises(ValueError):
            single_slit_amplitude(0.0, -0.1, self.GEOM, self.LAM)
        with pytest.raises(ValueError):
            single_slit_amplitude(0.0, 0.01, self.GEOM, -1e-9)

    def test_near_field_structure_inside_aperture(self):
        # close behind the slit, the intensity oscillates inside the
        # geometric shadow edge instead of being flat
        x = np.linspace(-self.GEOM.width / 2, self.GEOM.width / 2, 801)
        inten = np.abs(single_slit_amplitude(x, 0.01, self.GEOM, self.LAM)) ** 2
        interior = inten[100:-100]
        rises = np.diff(interior) > 0
        assert rises.any() and (~rises).any()

    def test_finite_everywhere(self):
        x = np.linspace(-5e-3, 5e-3, 500)
        for y in (1e-6, 1e-3, 0.5):
            psi = single_slit_amplitude(x, y, self.GEOM, self.LAM)
            assert np.all(np.isfinite(psi.real)) and np.all(np.isfinite(psi.imag))


class TestDoubleSlitAmplitude:
    GEOM = SlitGeometry(width=0.1e-3, separation=0.3e-3)
    LAM = 700e-9

    def test_even_field(self):
        rng = np.random.default_rng(4)
        x = rng.uniform(-1.5e-3, 1.5e-3, 64)
        a = double_slit_amplitude(x, 0.01, self.GEOM, self.LAM)
        b = double_slit_amplitude(-x, 0.01, self.GEOM, self.LAM)
        assert np.array_equal(a, b)

    def test_coincident_slits_double_the_field(self):
        geom0 = SlitGeometry(width=0.1e-3, separation=0.0)
        x = np.linspace(-1e-3, 1e-3, 11)
        two = double_slit_amplitude(x, 0.01, geom0, self.LAM)
        one = single_slit_amplitude(x, 0.01, geom0, self.LAM)
        assert np.allclose(two, 2 * one, rtol=1e-15)

    def test_interference_fringes_on_screen(self):
        x = np.linspace(-1e-3, 1e-3, 4001)
        inten = np.abs(double_slit_amplitude(x, 0.01, self.GEOM, self.LAM)) ** 2
        interior = (x > -5e-4) & (x < 5e-4)
        sign = np.diff(np.sign(np.diff(inten[interior])))
        n_maxima = int((sign < 0).sum())
        assert n_maxima > 5


class TestLineDistribution:
    LAM = 700e-9

    def test_uniform_over_aperture_sites(self):
        # slit spans exactly the 5 interior sites of a 7-site grid
        grid = make_grid(-3.0, 3.0, 7)
        geom = SlitGeometry(width=4.2)
        dist = line_distribution(grid, 0.0, geom, self.LAM)
        assert np.array_equal(dist.weights, [0, 0.2, 0.2, 0.2, 0.2, 0.2, 0])

    def test_aperture_mask_double(self):
        grid = make_grid(-1.5e-3, 1.5e-3, 2001)
        geom = SlitGeometry(width=0.1e-3, separation=0.3e-3)
        mask = aperture_mask(grid, geom)
        assert mask.sum() == 134
        x = grid.positions[mask]
        assert np.all((np.abs(np.abs(x) - 1.5e-4)) <= 5e-5)

    def test_normalized_above_plane(self):
        grid = make_grid(-1.5e-3, 1.5e-3, 501)
        geom = SlitGeometry(width=0.1e-3, separation=0.3e-3)
        for y in (1e-4, 1e-3, 1e-2):
            dist = line_distribution(grid, y, geom, self.LAM)
            assert abs(dist.weights.sum() - 1.0) <= 1e-12

    def test_grid_missing_aperture_rejected(self):
        grid = make_grid(1.0, 2.0, 11)
        geom = SlitGeometry(width=1e-4)
        with pytest.raises(ValueError):
            line_distribution(grid, 0.0, geom, self.LAM)

    def test_mirror_symmetric_grid_gives_site_exact_symmetry(self):
        # dyadic spacing makes mirrored site positions exact
        grid = make_grid(-1.0, 1.0, 2049)
        geom = SlitGeometry(width=0.15, separation=0.4)
        dist = line_distribution(grid, 0.35, geom, 0.01)
        assert np.array_equal(dist.weights, dist.weights[::-1])

    def test_flux_roughly_conserved_between_lines(self):
        grid = make_grid(-5e-3, 5e-3, 4001)
        geom = SlitGeometry(width=0.1e-3, separation=0.3e-3)
        fluxes = []
        for y in (0.005, 0.01):
            psi = double_slit_amplitude(grid.positions, y, geom, self.LAM)
            fluxes.append((np.abs(psi) ** 2).sum() * grid.dx)
        assert abs(fluxes[0] - fluxes[1]) / fluxes[0] < 0.05


def test_boundary_weight_ratio_flags_narrow_grid():
    geom = SlitGeometry(width=0.1e-3, separation=0.3e-3)
    narrow = make_grid(-4e-4, 4e-4, 801)
    wide = make_grid(-5e-3, 5e-3, 801)
    r_narrow = boundary_weight_ratio(line_distribution(narrow, 0.01, geom, 700e-9))
    r_wide = boundary_weight_ratio(line_distribution(wide, 0.01, geom, 700e-9))
    assert r_narrow > r_wide
