import numpy as np
import pytest
from numpy.testing import assert_allclose

from hmimo.geometry import (WAVENUMBER, ArrayGeometry, AngularSpread,
                            build_geometry, direction_cosine,
                            focus_excitation, steer_excitation,
                            uniform_excitation)


class TestBuildGeometry:
    def test_linear_eleven_elements(self):
        g = build_geometry("linear", 5.0, N_x=11)
        assert g.n_elements == 11
        assert_allclose(g.positions[:, 0], np.arange(11) * 0.5)
        assert np.all(g.positions[:, 1:] == 0.0)
        assert_allclose(g.positions[:, 0].max() - g.positions[:, 0].min(), 5.0)

    def test_planar_grid(self):
        g = build_geometry("planar", 5.0, 5.0, 11)
        assert g.n_elements == 121
        assert g.N_y == 11
        assert np.all(g.positions[:, 2] == 0.0)
        # row-major over (x index, y index)
        assert_allclose(g.positions[0], [0.0, 0.0, 0.0])
        assert_allclose(g.positions[1], [0.0, 0.5, 0.0])
        assert_allclose(g.positions[11], [0.5, 0.0, 0.0])

    def test_volumetric_checkerboard(self):
        g = build_geometry("volumetric", 5.0, 5.0, 21, dz_offset=1.0)
        assert g.n_elements == 21 * 11
        zs = g.positions[:, 2].reshape(21, 11)
        ii, jj = np.meshgrid(np.arange(21), np.arange(11), indexing="ij")
        assert_allclose(zs, ((ii + jj) % 2) * 1.0)
        assert set(np.unique(zs)) == {0.0, 1.0}

    def test_volumetric_zero_offset_matches_planar(self):
        gv = build_geometry("volumetric", 5.0, 5.0, 11, dz_offset=0.0)
        gp = build_geometry("planar", 5.0, 5.0, 11)
        assert_allclose(gv.positions, gp.positions)

    def test_single_element_at_origin(self):
        g = build_geometry("linear", 5.0, N_x=1)
        assert_allclose(g.positions, [[0.0, 0.0, 0.0]])

    def test_rejects_bad_dimensions(self):
        with pytest.raises(ValueError):
            build_geometry("linear", -1.0, N_x=4)
        with pytest.raises(ValueError):
            build_geometry("planar", 5.0, 0.0, 4)
        with pytest.raises(ValueError):
            build_geometry("linear", 5.0, N_x=0)
        with pytest.raises(ValueError):
            build_geometry("ring", 5.0, 5.0, 4)

    def test_dump_table_contains_every_element(self):
        g = build_geometry("planar", 1.0, 1.0, 3)
        lines = g.dump_table().strip().splitlines()
        assert lines[0].startswith("#")
        assert len(lines) == 1 + g.n_elements
        idx, x, y, z = lines[4].split()
        assert int(idx) == 3


class TestSteering:
    def test_broadside_planar_phases_zero(self):
        g = build_geometry("planar", 2.0, 2.0, 5)
        exc = steer_excitation(g, 0.0, 0.0)
        assert_allclose(exc.phase, 0.0, atol=1e-12)
        assert_allclose(exc.amplitude, 1.0)

    def test_two_element_endfire_pi_difference(self):
        g = build_geometry("linear", 0.5, N_x=2)
        exc = steer_excitation(g, np.pi / 2.0, 0.0)
        assert_allclose(abs(exc.phase[1] - exc.phase[0]), np.pi, rtol=1e-12)

    def test_volumetric_height_phase(self):
        # element at z = 1 steered to broadside gets alpha = -k * 1
        pos = np.array([[0.0, 0.0, 1.0]])
        g = ArrayGeometry("linear", 1.0, 0, 0, 1, 1, 0, 0, pos)
        exc = steer_excitation(g, 0.0, 0.0)
        assert_allclose(exc.phase[0], -2.0 * np.pi, rtol=1e-12)

    def test_phase_differences_translation_invariant(self):
        rng = np.random.default_rng(5)
        pos = rng.uniform(-1, 1, (6, 3))
        g1 = ArrayGeometry("linear", 1, 0, 0, 6, 1, 0, 0, pos)
        g2 = ArrayGeometry("linear", 1, 0, 0, 6, 1, 0, 0, pos + [0.7, -1.2, 3.3])
        e1 = steer_excitation(g1, 0.8, 1.1)
        e2 = steer_excitation(g2, 0.8, 1.1)
        d1 = e1.phase - e1.phase[0]
        d2 = e2.phase - e2.phase[0]
        assert_allclose(d1, d2, atol=1e-9)

    def test_in_phase_along_steer_direction(self):
        g = build_geometry("volumetric", 3.0, 2.0, 7)
        theta, phi = 0.9, 2.2
        exc = steer_excitation(g, theta, phi)
        total = WAVENUMBER * direction_cosine(g.positions, theta, phi) + exc.phase
        assert_allclose(total, 0.0, atol=1e-9)


class TestFocusing:
    def test_single_element_phase(self):
        g = build_geometry("linear", 1.0, N_x=1)
        r_f = np.array([1.0, 2.0, 2.0])
        exc = focus_excitation(g, r_f)
        assert_allclose(exc.phase[0], WAVENUMBER * 3.0, rtol=1e-12)

    def test_far_focus_matches_broadside_steer(self):
        # small aperture so the quadratic phase residue stays tiny; include
        # height offsets so the z phase term is actually exercised
        pos = np.array([[0.0, 0.0, 0.0], [0.5, 0.0, 0.3],
                        [1.0, 0.2, 0.0], [0.2, 0.7, 0.5]])
        g = ArrayGeometry("volumetric", 1.0, 0.7, 0.5, 4, 1, 0, 0.5, pos)
        far = focus_excitation(g, [0.0, 0.0, 1e4])
        steer = steer_excitation(g, 0.0, 0.0)
        d_focus = far.phase - far.phase[0]
        d_steer = steer.phase - steer.phase[0]
        assert np.max(np.abs(d_focus - d_steer)) < 1e-3

    def test_symmetric_pair_equal_phase(self):
        g = build_geometry("linear", 1.0, N_x=2)
        exc = focus_excitation(g, [0.5, 0.0, 4.0])  # on perpendicular bisector
        assert_allclose(exc.phase[0], exc.phase[1], rtol=1e-12)

    def test_rejects_focus_on_element(self):
        g = build_geometry("linear", 1.0, N_x=2)
        with pytest.raises(ValueError):
            focus_excitation(g, [1.0, 0.0, 0.0])


def test_uniform_excitation():
    g = build_geometry("planar", 1.0, 1.0, 2)
    exc = uniform_excitation(g)
    assert len(exc) == g.n_elements
    assert np.all(exc.amplitude == 1.0)
    assert np.all(exc.phase == 0.0)


def test_angular_spread_validation():
    AngularSpread(np.pi / 2, 2 * np.pi)
    with pytest.raises(ValueError):
        AngularSpread(0.0)
    with pytest.raises(ValueError):
        AngularSpread(np.pi / 3, -0.1)


def test_spacing_and_circumradius():
    g = build_geometry("linear", 5.0, N_x=11)
    assert g.spacing_x == 0.5
    assert_allclose(g.circumradius(), 2.5)
