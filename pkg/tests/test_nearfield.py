import numpy as np
import pytest
from numpy.testing import assert_allclose

from hmimo.farfield import ElementPattern, gain_quadrature
from hmimo.geometry import (WAVENUMBER, ArrayGeometry, build_geometry,
                            focus_excitation, steer_excitation,
                            uniform_excitation)
from hmimo.nearfield import (A_L_POLARIZATION, LossFactorModel, DyadicSample,
                             dyadic_radiated_power, electric_dyadic,
                             gain_loss_decomposition, loss_factor,
                             loss_factor_uniform, magnetic_dyadic, near_gain,
                             near_gain_scalar, poynting, scalar_field,
                             scalar_green, scalar_green_far, square_array,
                             synth_fields, total_power_surface)

K = WAVENUMBER


def scalar_kernel(r, r_src):
    d = np.linalg.norm(np.asarray(r, float) - np.asarray(r_src, float))
    return np.exp(-1j * K * d) / (4 * np.pi * d)


class TestScalarGreen:
    def test_magnitude_and_phase_at_one_wavelength(self):
        g = scalar_green([1.0, 0.0, 0.0], [0.0, 0.0, 0.0])
        assert_allclose(abs(g), 1.0 / (4 * np.pi), rtol=1e-12)
        assert_allclose(np.angle(g), 0.0, atol=1e-9)  # -2*pi == 0 mod 2*pi

    def test_far_approximation(self):
        # the residual phase error is the Fresnel term k |r'_t|^2 / (2 r),
        # at most k (2.5 sqrt(2))^2 / 2e3 = 0.04 rad for this geometry
        rng = np.random.default_rng(2)
        r = np.array([0.0, 0.0, 1e3])
        for _ in range(5):
            r_src = rng.uniform(-2.5, 2.5, 3) * np.array([1, 1, 0])
            exact = scalar_green(r, r_src)
            approx = scalar_green_far(r, r_src)
            assert abs(abs(approx) / abs(exact) - 1) < 0.01
            dphase = np.angle(approx / exact)
            bound = WAVENUMBER * (r_src[0] ** 2 + r_src[1] ** 2) / (2 * 1e3)
            assert abs(dphase) <= bound + 1e-6
            assert abs(dphase) < 4e-2

    def test_reciprocity(self):
        a, b = np.array([0.3, -1.0, 2.0]), np.array([-0.5, 0.4, 0.1])
        assert scalar_green(a, b) == scalar_green(b, a)

    def test_zero_distance_rejected(self):
        with pytest.raises(ValueError):
            scalar_green([1.0, 0.0, 0.0], [1.0, 0.0, 0.0])


def fd_electric_dyadic(r, r_src, h=1e-4):
    """(k^2 I + grad grad) e^{-jkR}/(4 pi k^2 R) by central differences."""
    r = np.asarray(r, float)
    out = np.zeros((3, 3), complex)

    def kernel(p):
        d = np.linalg.norm(p - r_src)
        return np.exp(-1j * K * d) / (4 * np.pi * K ** 2 * d)

    for i in range(3):
        for j in range(3):
            if i == j:
                ei = np.zeros(3)
                ei[i] = h
                second = (kernel(r + ei) - 2 * kernel(r) + kernel(r - ei)) / h ** 2
                out[i, j] = K ** 2 * kernel(r) + second
            else:
                ei, ej = np.zeros(3), np.zeros(3)
                ei[i] = h
                ej[j] = h
                mixed = (kernel(r + ei + ej) - kernel(r + ei - ej)
                         - kernel(r - ei + ej) + kernel(r - ei - ej)) / (4 * h * h)
                out[i, j] = mixed
    return out


class TestElectricDyadic:
    def test_on_axis_structure(self):
        g = electric_dyadic(np.array([0.0, 0.0, 2.0]), np.zeros(3))
        assert g[1, 0] == 0 and g[2, 0] == 0
        # G_xx on axis is the transverse kernel G1
        d = 2.0
        kr = K * d
        g1 = (-1 - 1j * kr + kr ** 2) * np.exp(-1j * kr) / (4 * np.pi * K ** 2 * d ** 3)
        assert_allclose(g[0, 0], g1, rtol=1e-12)

    def test_far_field_tends_to_scalar_green(self):
        d = 100.0
        g = electric_dyadic(np.array([0.0, 0.0, d]), np.zeros(3))
        rel = abs(g[0, 0] - scalar_kernel([0, 0, d], [0, 0, 0])) \
            / abs(scalar_kernel([0, 0, d], [0, 0, 0]))
        assert rel < 2.0 / (K * d)

    def test_matches_finite_difference_operator(self):
        rng = np.random.default_rng(7)
        r = 3.0 * np.array([0.5, -0.6, 0.62])
        r = 3.0 * r / np.linalg.norm(r)
        for _ in range(3):
            r_src = rng.uniform(-0.3, 0.3, 3)
            exact = electric_dyadic(r, r_src)
            fd = fd_electric_dyadic(r, r_src)
            assert np.max(np.abs(exact - fd)) / np.max(np.abs(exact)) < 1e-4
            # trace identity: 3 G1 + G2 = 2 g(R)
            dist = np.linalg.norm(r - r_src)
            assert_allclose(np.trace(exact), 2 * scalar_kernel(r, r_src),
                            rtol=1e-10)

    def test_reciprocity_transpose(self):
        a, b = np.array([1.0, 0.2, -0.5]), np.array([-0.3, 0.9, 1.4])
        assert_allclose(electric_dyadic(a, b), electric_dyadic(b, a).T,
                        rtol=1e-14)

    def test_symmetric_matrix(self):
        g = electric_dyadic(np.array([1.0, 1.0, 1.0]), np.zeros(3))
        assert_allclose(g, g.T, rtol=1e-14)


def fd_curl_rows(r, r_src, h=1e-4):
    """Centered finite-difference curl structure of the scalar kernel."""
    def g(p):
        d = np.linalg.norm(p - r_src)
        return np.exp(-1j * K * d) / (4 * np.pi * d)

    grad = np.zeros(3, complex)
    for i in range(3):
        e = np.zeros(3)
        e[i] = h
        grad[i] = (g(r + e) - g(r - e)) / (2 * h)
    gx, gy, gz = grad
    return np.array([[0, -gz, gy], [gz, 0, -gx], [-gy, gx, 0]])


class TestMagneticDyadic:
    def test_diagonal_exactly_zero(self):
        m = magnetic_dyadic(np.array([0.7, -0.2, 1.9]), np.zeros(3))
        assert np.all(np.diag(m) == 0)

    def test_antisymmetric(self):
        m = magnetic_dyadic(np.array([0.7, -0.2, 1.9]), np.zeros(3))
        assert_allclose(m, -m.T, rtol=1e-14)

    def test_matches_finite_difference_curl(self):
        r = np.array([1.2, -0.8, 1.1])
        r = 2.0 * r / np.linalg.norm(r)
        m = magnetic_dyadic(r, np.zeros(3))
        fd = fd_curl_rows(r, np.zeros(3))
        assert np.max(np.abs(m - fd)) / np.max(np.abs(m)) < 1e-4


class TestSynthFields:
    def test_on_axis_x_source_field_only_x(self):
        g = build_geometry("linear", 1.0, N_x=1)
        s = synth_fields(g, uniform_excitation(g), "x", np.array([0.0, 0.0, 5.0]))
        assert abs(s.E[1]) < 1e-15 and abs(s.E[2]) < 1e-15
        assert abs(s.E[0]) > 0

    def test_wave_impedance_far_field(self):
        g = build_geometry("linear", 1.0, N_x=1)
        s = synth_fields(g, uniform_excitation(g), "x", np.array([0.0, 0.0, 100.0]))
        assert abs(np.linalg.norm(s.E) / np.linalg.norm(s.H) - 1.0) < 0.01

    def test_focus_aligns_scalar_contributions(self):
        g = build_geometry("planar", 2.0, 2.0, 5)
        r_f = np.array([0.4, 0.2, 3.0])
        exc = focus_excitation(g, r_f)
        contributions = exc.weights * scalar_green(r_f[None, :], g.positions)
        phases = np.angle(contributions)
        assert np.ptp(phases) < 1e-9


class TestPoynting:
    def test_far_field_flow_is_axial(self):
        g = build_geometry("planar", 2.0, 2.0, 5)
        exc = steer_excitation(g, 0.0, 0.0)
        r = g.centroid + np.array([0.0, 0.0, 100.0])
        p = poynting(synth_fields(g, exc, "x", r))
        assert p.S[2] > 0
        assert abs(p.S[0]) < 1e-3 * p.S[2]
        assert abs(p.S[1]) < 1e-3 * p.S[2]

    def test_parallel_fields_give_zero(self):
        e = np.array([1.0 + 1j, 0, 0])
        sample = DyadicSample(E=e, H=2.5 * e, at=np.zeros(3), source_pol="x")
        assert_allclose(poynting(sample).S, 0.0, atol=1e-15)

    def test_regrouped_components_reconstruct_vector(self):
        g = build_geometry("planar", 1.0, 1.0, 3)
        exc = focus_excitation(g, [0.3, 0.1, 2.0])
        p = poynting(synth_fields(g, exc, "x", np.array([0.5, -0.4, 2.5])))
        rebuilt = np.zeros(3)
        rebuilt[2] = p.S_pq["x"]
        rebuilt[0] = p.S_pq["y"]
        rebuilt[1] = p.S_pq["z"]
        assert_allclose(rebuilt, p.S, rtol=1e-14)


class TestTotalPower:
    def test_single_element_matches_dipole_power(self):
        g = build_geometry("linear", 1.0, N_x=1)
        exc = uniform_excitation(g)
        p_surface = total_power_surface(g, exc, "x", 20.0)
        p_dipole = K ** 2 / (12 * np.pi)  # unit current element, eta = 1
        assert abs(p_surface / p_dipole - 1) < 0.01

    def test_matches_closed_form_and_radius_invariant(self):
        g = build_geometry("planar", 1.5, 1.5, 4)
        exc = steer_excitation(g, 0.4, 0.9)
        p50 = total_power_surface(g, exc, "x", 50.0)
        p100 = total_power_surface(g, exc, "x", 100.0)
        p_closed = dyadic_radiated_power(g, exc, "x")
        assert abs(p50 / p100 - 1) < 0.01
        assert abs(p50 / p_closed - 1) < 0.01

    def test_sphere_must_clear_array(self):
        g = build_geometry("planar", 4.0, 4.0, 5)
        with pytest.raises(ValueError):
            total_power_surface(g, uniform_excitation(g), "x", 2.0)


class TestNearGain:
    def test_single_element_far_gain(self):
        g = build_geometry("linear", 1.0, N_x=1)
        exc = uniform_excitation(g)
        p = dyadic_radiated_power(g, exc, "x")
        gxx = near_gain(g, exc, "x", "x", [0.0, 0.0, 1e3], p)
        assert abs(gxx / 1.5 - 1) < 0.01

    def test_cross_polarization_vanishes_on_axis(self):
        g = build_geometry("linear", 1.0, N_x=1)
        exc = uniform_excitation(g)
        p = dyadic_radiated_power(g, exc, "x")
        gxz = near_gain(g, exc, "x", "z", [0.0, 0.0, 7.0], p)
        assert abs(gxz) < 1e-12

    def test_near_to_far_continuity_with_far_field_module(self):
        # an x-polarized element array equals a z-polarized (u=1, v=0)
        # pattern array in the rotated frame (x->z, y->x, z->y)
        g = build_geometry("planar", 1.5, 1.5, 4)
        exc = steer_excitation(g, 0.0, 0.0)
        p = dyadic_radiated_power(g, exc, "x")
        g_near = near_gain(g, exc, "x", "x", g.centroid + [0, 0, 1e3], p)
        rot_pos = g.positions[:, (1, 2, 0)]
        g_rot = ArrayGeometry("planar", 1.5, 1.5, 0, 4, 4, 0.5, 0, rot_pos)
        # broadside +z maps to +y: theta = pi/2, phi = pi/2
        exc_rot = steer_excitation(g_rot, np.pi / 2, np.pi / 2)
        far = gain_quadrature(g_rot, exc_rot, ElementPattern(1.0, 0.0),
                              np.pi / 2, np.pi / 2)
        assert abs(g_near / far.value - 1) < 0.02

    def test_focused_polarization_ratio_near_physical_model(self):
        tx = square_array(5.0, 0.5)
        d = gain_loss_decomposition(tx, 5.0)
        model = loss_factor_uniform(A_L_POLARIZATION * K * 5.0 / 5.0)
        assert d["polarization"] < 1.0
        assert abs(d["polarization"] - model) < 0.1


class TestLossFactor:
    def test_zero_sigma_is_unity(self):
        assert loss_factor(LossFactorModel(0.0)) == 1.0

    def test_sigma_two_value(self):
        assert_allclose(loss_factor(LossFactorModel(2.0)), 0.3493, atol=1e-4)

    @pytest.mark.parametrize("sigma", [0.5, 1.0, 3.0])
    def test_uniform_series_equals_bessel_identity(self, sigma):
        assert abs(loss_factor(LossFactorModel(sigma))
                   - loss_factor_uniform(sigma)) < 1e-10

    def test_tapered_aperture_normalized(self):
        tapered = LossFactorModel(0.0, m=1.0, c_m=0.3)
        assert_allclose(loss_factor(tapered), 1.0, rtol=1e-12)
        assert loss_factor(LossFactorModel(1.5, m=1.0, c_m=0.3)) < 1.0

    def test_model_validation(self):
        with pytest.raises(ValueError):
            LossFactorModel(-1.0)
        with pytest.raises(ValueError):
            LossFactorModel(1.0, m=-2.0)


class TestLossDecomposition:
    def test_far_limit_all_ratios_near_one(self):
        tx = square_array(5.0, 0.5)
        d = gain_loss_decomposition(tx, 200.0)
        for key in ("polarization", "beamforming", "illumination"):
            assert abs(d[key] - 1.0) < 0.01, key

    def test_losses_multiply_back_to_steered_gain(self):
        tx = square_array(5.0, 0.5)
        d = gain_loss_decomposition(tx, 8.0)
        product = d["gain_dyadic_far"] * d["polarization"] \
            * d["illumination"] * d["beamforming"]
        assert_allclose(product, d["gain_dyadic_steer"], rtol=1e-9)

    def test_beamforming_loss_severe_at_close_range(self):
        tx = square_array(5.0, 0.5)
        d = gain_loss_decomposition(tx, 5.0)
        assert d["beamforming"] < 0.1
        assert 0.5 < d["illumination"] < 1.0


def test_scalar_mode_gain_far_limit_is_isotropic_array_gain():
    g = build_geometry("linear", 0.5, N_x=2)
    exc = steer_excitation(g, 0.0, 0.0)
    gval = near_gain_scalar(g, exc, g.centroid + [0, 0, 1e4])
    assert abs(gval / 2.0 - 1) < 1e-3  # half-wave pair broadside gain 2


def test_scalar_field_single_element():
    g = build_geometry("linear", 1.0, N_x=1)
    val = scalar_field(g, uniform_excitation(g), [0.0, 0.0, 2.0])
    assert_allclose(val, scalar_kernel([0, 0, 2.0], [0, 0, 0]), rtol=1e-12)
