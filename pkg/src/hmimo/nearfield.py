"""Near-field machinery: dyadic Green's functions, Poynting flow, and gains.

Unit system: lengths in wavelengths, k = 2*pi, and natural electromagnetic
units mu = eps = 1, so the wave impedance and wave speed are both 1 and the
angular frequency equals k.  The electric field of a unit current element
is E = -j*k*G.p_hat (the -j*omega*mu constant with these units); the
magnetic field carries no extra constant.  All gains are ratios, so the
single folded constant FIELD_SCALE below is the only normalization that
ever appears.

The near-field gain of a transmitting array follows the far-field gain
definition with the radiation intensity replaced by r^2 times the Poynting
component associated with the receive polarization, divided by the total
radiated power.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import ArrayGeometry, Excitation, WAVENUMBER, build_geometry, \
    focus_excitation, steer_excitation
from .farfield import ElementPattern, prad_closed_general, prad_closed_isotropic
from .specfun import SeriesControl, SeriesConvergenceError, bessel_j

FIELD_SCALE = -1j * WAVENUMBER  # -j*omega*mu with mu = 1, omega = k

_POLS = ("x", "y", "z")
_POL_INDEX = {"x": 0, "y": 1, "z": 2}

# Poynting regrouping: the flow component along each axis is labelled by
# the electric polarization that dominates it for broadside-type links
# (z-directed flow <- x-polarized field, x <- y, y <- z).
_FLOW_AXIS_FOR_POL = {"x": 2, "y": 0, "z": 1}


@dataclass(frozen=True)
class DyadicSample:
    """E/H field vectors at a point for one source polarization."""

    E: np.ndarray           # complex (3,)
    H: np.ndarray           # complex (3,)
    at: np.ndarray          # observation point (3,)
    source_pol: str         # "x" | "y" | "z"


@dataclass(frozen=True)
class PoyntingSample:
    """Time-averaged power-flux vector with its polarization bookkeeping."""

    S: np.ndarray           # real (3,), W per unit area in natural units
    S_pq: dict              # field-pol label -> flow component


@dataclass(frozen=True)
class LossFactorModel:
    """Aperture-taper loss model eta(sigma) for near-field gain.

    sigma = a_L * k * L / R for a square array of side L at range R; m and
    c_m shape the assumed aperture amplitude distribution (m=0, c_m=0 is
    the uniform aperture).
    """

    sigma: float
    m: float = 0.0
    c_m: float = 0.0
    a_L: float = 1.0

    def __post_init__(self):
        if self.sigma < 0:
            raise ValueError("sigma must be non-negative")
        if self.m < 0:
            raise ValueError("m must be non-negative")


A_L_POLARIZATION = 0.12
A_L_ILLUMINATION = 0.18
A_L_BEAMFORMING = 0.5


def _separation(r, r_src):
    d = np.asarray(r, float) - np.asarray(r_src, float)
    dist = np.linalg.norm(d, axis=-1)
    if np.any(dist == 0):
        raise ValueError("observation point coincides with a source point")
    return d, dist


def scalar_green(r, r_src):
    """Free-space scalar Green's function e^{-jkR}/(4 pi R).

    Broadcasts over leading axes of either argument.
    """
    _, dist = _separation(r, r_src)
    return np.exp(-1j * WAVENUMBER * dist) / (4.0 * np.pi * dist)


def scalar_green_far(r, r_src):
    """Far-field approximation g = e^{-jkr}/(4 pi r) * e^{+jk r_src.k_hat}."""
    r = np.asarray(r, float)
    rmag = np.linalg.norm(r, axis=-1)
    if np.any(rmag == 0):
        raise ValueError("far-field direction undefined at the origin")
    k_hat = r / rmag[..., None]
    phase = np.einsum("...i,...i->...", np.asarray(r_src, float), k_hat)
    return np.exp(-1j * WAVENUMBER * rmag) / (4.0 * np.pi * rmag) \
        * np.exp(1j * WAVENUMBER * phase)


def _g1_g2(dist):
    kr = WAVENUMBER * dist
    pre = np.exp(-1j * kr) / (4.0 * np.pi * WAVENUMBER ** 2 * dist ** 3)
    g1 = (-1.0 - 1j * kr + kr ** 2) * pre
    g2 = (3.0 + 3j * kr - kr ** 2) * pre
    return g1, g2


def electric_dyadic(r, r_src):
    """Electric dyadic Green's function G1(R) I + G2(R) a_R a_R, shape (...,3,3).

    Symmetric in the matrix sense and reciprocal: G(r, r') = G(r', r)^T.
    """
    d, dist = _separation(r, r_src)
    g1, g2 = _g1_g2(dist)
    a_r = d / dist[..., None]
    outer = a_r[..., :, None] * a_r[..., None, :]
    eye = np.eye(3)
    return g1[..., None, None] * eye + g2[..., None, None] * outer


def magnetic_dyadic(r, r_src):
    """Magnetic dyadic Green's function (curl operator acting on g), (...,3,3).

    Antisymmetric with an exactly zero diagonal; entries are the first
    derivatives of the scalar Green's function.
    """
    d, dist = _separation(r, r_src)
    kr = WAVENUMBER * dist
    # d g/d x_i = -cos_i (1 + j k R) e^{-jkR} / (4 pi R^2)
    grad = (-d / dist[..., None]) * ((1.0 + 1j * kr)
                                     * np.exp(-1j * kr)
                                     / (4.0 * np.pi * dist ** 2))[..., None]
    gx, gy, gz = grad[..., 0], grad[..., 1], grad[..., 2]
    zero = np.zeros_like(gx)
    rows = [np.stack([zero, -gz, gy], axis=-1),
            np.stack([gz, zero, -gx], axis=-1),
            np.stack([-gy, gx, zero], axis=-1)]
    return np.stack(rows, axis=-2)


def synth_fields(geom: ArrayGeometry, exc: Excitation, source_pol: str,
                 r) -> DyadicSample:
    """Superposed E and H at point r from identically polarized elements.

    E = FIELD_SCALE * sum_n w_n G(r, r_n) . p_hat and H uses the magnetic
    dyadic without extra constants; with the natural units of this module
    |E|/|H| tends to the unit wave impedance in the far field.
    """
    if source_pol not in _POLS:
        raise ValueError("source_pol must be one of 'x', 'y', 'z'")
    if len(exc) != geom.n_elements:
        raise ValueError("excitation length does not match element count")
    r = np.asarray(r, float)
    p = _POL_INDEX[source_pol]
    ge = electric_dyadic(r[None, :], geom.positions)           # (N, 3, 3)
    gm = magnetic_dyadic(r[None, :], geom.positions)
    w = exc.weights
    e_vec = FIELD_SCALE * np.einsum("n,ni->i", w, ge[:, :, p])
    h_vec = np.einsum("n,ni->i", w, gm[:, :, p])
    return DyadicSample(E=e_vec, H=h_vec, at=r, source_pol=source_pol)


def _fields_many(geom, exc, source_pol, points):
    """Vectorized E, H at many points, shapes (M, 3)."""
    p = _POL_INDEX[source_pol]
    pts = np.asarray(points, float)
    ge = electric_dyadic(pts[:, None, :], geom.positions[None, :, :])  # (M,N,3,3)
    gm = magnetic_dyadic(pts[:, None, :], geom.positions[None, :, :])
    w = exc.weights
    e = FIELD_SCALE * np.einsum("n,mni->mi", w, ge[:, :, :, p])
    h = np.einsum("n,mni->mi", w, gm[:, :, :, p])
    return e, h


def poynting(sample: DyadicSample) -> PoyntingSample:
    """S = Re(E x H*)/2 plus the per-polarization regrouped components."""
    s = 0.5 * np.real(np.cross(sample.E, np.conj(sample.H)))
    s_pq = {pol: float(s[axis]) for pol, axis in _FLOW_AXIS_FOR_POL.items()}
    return PoyntingSample(S=s, S_pq=s_pq)


def scalar_field(geom: ArrayGeometry, exc: Excitation, r) -> complex:
    """Scalar-model field sum_n w_n g(r, r_n) (isotropic elements)."""
    g = scalar_green(np.asarray(r, float)[None, :], geom.positions)
    return complex((exc.weights * g).sum())


def total_power_surface(geom: ArrayGeometry, exc: Excitation, source_pol: str,
                        radius: float, n_theta: int = 128, n_phi: int = 256,
                        center=None) -> float:
    """Poynting flux through a sphere of given radius around the array.

    Gauss-Legendre in cos(theta) times trapezoid in phi.  The sphere must
    enclose every element with at least one wavelength of clearance.
    """
    center = geom.centroid if center is None else np.asarray(center, float)
    clearance = radius - np.linalg.norm(geom.positions - center, axis=1).max()
    if clearance < 1.0:
        raise ValueError("sphere must clear the array by at least one wavelength")
    nodes, wts = np.polynomial.legendre.leggauss(n_theta)
    ct = nodes
    st = np.sqrt(1.0 - ct ** 2)
    ph = np.arange(n_phi) * (2.0 * np.pi / n_phi)
    dirs = np.stack([np.outer(st, np.cos(ph)),
                     np.outer(st, np.sin(ph)),
                     np.outer(ct, np.ones_like(ph))], axis=-1).reshape(-1, 3)
    total = 0.0
    chunk = max(1, int(2e6 // max(geom.n_elements, 1)))
    w_flat = np.repeat(wts, n_phi) * (2.0 * np.pi / n_phi)
    for lo in range(0, dirs.shape[0], chunk):
        hi = min(lo + chunk, dirs.shape[0])
        pts = center + radius * dirs[lo:hi]
        e, h = _fields_many(geom, exc, source_pol, pts)
        s = 0.5 * np.real(np.cross(e, np.conj(h)))
        total += float(((s * dirs[lo:hi]).sum(axis=1) * w_flat[lo:hi]).sum())
    return total * radius ** 2


_AXIS_PERMUTATION = {  # rotation taking source_pol to the z axis: v -> (vy, vz, vx) etc.
    "x": (1, 2, 0),
    "y": (2, 0, 1),
    "z": (0, 1, 2),
}


def dyadic_radiated_power(geom: ArrayGeometry, exc: Excitation,
                          source_pol: str,
                          ctrl: SeriesControl = SeriesControl()) -> float:
    """Exact radiated power of the dyadic element array via the far field.

    A point current element radiates a sin(theta) pattern about its own
    axis, so after rotating the source axis onto z the closed-form series
    for the (u=1, v=0) pattern applies; the (k/4pi)^2 factor converts from
    the unit-amplitude far-field convention to this module's field scale.
    """
    perm = _AXIS_PERMUTATION[source_pol]
    pos = geom.positions[:, perm]
    rot = ArrayGeometry(geom.kind, geom.L_x, geom.L_y, geom.L_z, geom.N_x,
                        geom.N_y, geom.dy, geom.dz_offset, pos)
    p_conv = prad_closed_general(rot, exc, ElementPattern(1.0, 0.0), ctrl)
    return (WAVENUMBER / (4.0 * np.pi)) ** 2 * p_conv


def scalar_radiated_power(geom: ArrayGeometry, exc: Excitation) -> float:
    """Radiated power of the scalar-model (isotropic) array."""
    return prad_closed_isotropic(geom, exc) / (4.0 * np.pi) ** 2


def near_gain(geom: ArrayGeometry, exc: Excitation, source_pol: str,
              field_pol: str, r, total_power: float) -> float:
    """Near-field gain G^{pq} = 4 pi r^2 S_pq(r) / P_total.

    The reference distance r is measured from the transmit-array centroid
    to the evaluation point.
    """
    if total_power <= 0:
        raise ValueError("total_power must be positive")
    if field_pol not in _POLS:
        raise ValueError("field_pol must be one of 'x', 'y', 'z'")
    r = np.asarray(r, float)
    dist = np.linalg.norm(r - geom.centroid)
    sample = synth_fields(geom, exc, source_pol, r)
    s_pq = poynting(sample).S_pq[field_pol]
    return 4.0 * np.pi * dist ** 2 * s_pq / total_power


def near_gain_scalar(geom: ArrayGeometry, exc: Excitation, r,
                     total_power: float | None = None) -> float:
    """Scalar-model near gain: co-polarized, isotropic elements.

    Power density is |E|^2/2 with the far-field impedance relation; the
    default total power is the closed-form isotropic radiated power.
    """
    if total_power is None:
        total_power = scalar_radiated_power(geom, exc)
    r = np.asarray(r, float)
    dist = np.linalg.norm(r - geom.centroid)
    e = scalar_field(geom, exc, r)
    s = 0.5 * abs(e) ** 2
    return 4.0 * np.pi * dist ** 2 * s / total_power


def loss_factor(model: LossFactorModel,
                ctrl: SeriesControl = SeriesControl()) -> float:
    """Near-field gain loss factor eta(sigma) of an aperture antenna.

    The uniform aperture (m=0, c_m=0) has the exact series

        eta = | sum_j (-1)^j sigma^{2j} / ((j+1)! (j+1)!) |,

    which equals (1 - J0(2 sigma)) / sigma^2.  Tapered apertures combine
    the I(m, n) kernels of the aperture distribution; that branch is
    normalized to eta(0) = 1.
    """
    sig = model.sigma
    if model.m == 0.0 and model.c_m == 0.0:
        total = 1.0
        term = 1.0
        for j in range(ctrl.max_terms):
            term *= -sig ** 2 / ((j + 2) ** 2)
            total += term
            if abs(term) <= ctrl.rel_tol * max(abs(total), np.finfo(float).tiny):
                return float(min(abs(total), 1.0))
        raise SeriesConvergenceError("loss-factor series did not converge",
                                     partial=total, terms=ctrl.max_terms)
    bracket = _taper_bracket(sig, model.m, model.c_m, ctrl)
    bracket0 = _taper_bracket(0.0, model.m, model.c_m, ctrl)
    return float(min(abs(bracket) ** 2 / abs(bracket0) ** 2, 1.0))


def _taper_series_i(m, n, sigma, ctrl):
    """I(m, n) = n! m! sum_j (-1)^j (sigma/2)^{2j} / [(j+m+1)! (j+n+1)!]."""
    from math import factorial
    if int(m) != m or int(n) != n:
        raise ValueError("taper exponents must be integers")
    total = 0.0
    for j in range(ctrl.max_terms):
        term = (-1.0) ** j * (sigma / 2.0) ** (2 * j) \
            * factorial(int(n)) * factorial(int(m)) \
            / (factorial(j + int(m) + 1) * factorial(j + int(n) + 1))
        total += term
        if j > 0 and abs(term) <= ctrl.rel_tol * max(abs(total), np.finfo(float).tiny):
            return total
    raise SeriesConvergenceError("taper kernel series did not converge",
                                 partial=total, terms=ctrl.max_terms)


def _taper_bracket(sigma, m, c_m, ctrl):
    return (_taper_series_i(m, m, sigma, ctrl)
            + c_m * _taper_series_i(m, 0, sigma, ctrl)
            + c_m * _taper_series_i(0, m, sigma, ctrl)
            + c_m ** 2 * _taper_series_i(0, 0, sigma, ctrl))


def loss_factor_uniform(sigma: float) -> float:
    """Closed Bessel form of the uniform loss factor, (1 - J0(2 sigma))/sigma^2."""
    if sigma == 0:
        return 1.0
    return (1.0 - bessel_j(0, 2.0 * sigma)) / sigma ** 2


FAR_REFERENCE_DISTANCE = 1e5


def gain_loss_decomposition(geom_tx: ArrayGeometry, R: float,
                            ctrl: SeriesControl = SeriesControl()) -> dict:
    """Polarization / beamforming / illumination losses of a coaxial link.

    The transmit array sits in the z = 0 plane; gains are evaluated on the
    link axis at range R with x-polarized sources, for the four modes
    {scalar, dyadic} x {focus, steer}.  Each loss is the gain reduction
    attributable to one near-field mechanism, so each tends to one as
    R grows:

    polarization = [G_xx(dyadic, focus) / G(scalar, focus)](R), divided by
                   the same ratio in the far-field limit (the residual
                   element-pattern offset between the dyadic and scalar
                   models carries no near-field information);
    beamforming  = G_xx(dyadic, steer) / G_xx(dyadic, focus) at R;
    illumination = G(scalar, focus)(R) / G(scalar) far limit: the share of
                   the far-field gain that perfect phase focusing cannot
                   recover because the aperture illumination is amplitude
                   tapered at finite range.
    """
    center_tx = geom_tx.centroid
    target = center_tx + np.array([0.0, 0.0, R])
    far_point = center_tx + np.array([0.0, 0.0, FAR_REFERENCE_DISTANCE])

    exc_focus = focus_excitation(geom_tx, target)
    exc_steer = steer_excitation(geom_tx, 0.0, 0.0)

    p_focus = dyadic_radiated_power(geom_tx, exc_focus, "x", ctrl)
    p_steer = dyadic_radiated_power(geom_tx, exc_steer, "x", ctrl)
    g_dyadic_focus = near_gain(geom_tx, exc_focus, "x", "x", target, p_focus)
    g_dyadic_steer = near_gain(geom_tx, exc_steer, "x", "x", target, p_steer)
    g_scalar_focus = near_gain_scalar(geom_tx, exc_focus, target)
    g_dyadic_far = near_gain(geom_tx, exc_steer, "x", "x", far_point, p_steer)
    g_scalar_far = near_gain_scalar(geom_tx, exc_steer, far_point)

    return {
        "gain_dyadic_focus": g_dyadic_focus,
        "gain_dyadic_steer": g_dyadic_steer,
        "gain_scalar_focus": g_scalar_focus,
        "gain_dyadic_far": g_dyadic_far,
        "gain_scalar_far": g_scalar_far,
        "polarization": (g_dyadic_focus / g_scalar_focus)
                        / (g_dyadic_far / g_scalar_far),
        "beamforming": g_dyadic_steer / g_dyadic_focus,
        "illumination": g_scalar_focus / g_scalar_far,
    }


def square_array(L: float, spacing: float = 0.5) -> ArrayGeometry:
    """Convenience: square planar array of side L with the given pitch."""
    n = int(round(L / spacing)) + 1
    return build_geometry("planar", L, L, n)
