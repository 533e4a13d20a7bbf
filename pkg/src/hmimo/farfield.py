"""Far-field gain of antenna arrays: quadrature, closed forms, and apertures.

The element pattern model is the rotationally symmetric power family
E(theta) ~ sin^u(theta) cos^v(theta) with u > -1, v > -1/2.  Gains follow
the standard definition

    G(theta, phi) = 4 pi U(theta, phi) / P_rad,

with the wave impedance fixed to 1 internally; it cancels in every gain
ratio and is never exposed.  An ideal reflective board is modelled by a
gain doubling (board_factor = 2) applied identically to the quadrature,
closed-form and averaged gain operations so the methods stay comparable.

Radiated power can be evaluated three ways: spherical product quadrature,
exact closed forms for the isotropic and cos-shaped elements, and a
power-series expansion combined with a Beta/1F2 integral for general
(u, v).  The closed forms and the series are pairwise cross-checked
against quadrature in the test-suite.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import (ArrayGeometry, AngularSpread, Excitation, LINEAR,
                       PLANAR, WAVENUMBER, steer_excitation)
from .specfun import SeriesControl, SeriesConvergenceError, beta_fn, hyp1f2, sinc_k

_ETA = 1.0  # wave impedance; cancels in all gain ratios

# quadrature defaults: Gauss-Legendre in cos(theta) x trapezoid in phi,
# refinement check doubles both
QUAD_N_THETA = 256
QUAD_N_PHI = 512
QUAD_REL_TOL = 1e-6

# effective strip width that a practical linear array presents along y
LINEAR_EFFECTIVE_WIDTH = 0.68


class QuadratureConvergenceError(RuntimeError):
    """Grid refinement changed the integral by more than the tolerance."""


@dataclass(frozen=True)
class ElementPattern:
    """Rotationally symmetric element pattern sin^u(theta) cos^v(theta)."""

    u: float = 0.0
    v: float = 0.0
    board_factor: float = 1.0

    def __post_init__(self):
        if self.u <= -1:
            raise ValueError("u must be > -1")
        if self.v <= -0.5:
            raise ValueError("v must be > -1/2")
        if self.board_factor not in (1.0, 2.0, 1, 2):
            raise ValueError("board_factor must be 1 (no board) or 2 (ideal board)")


ISOTROPIC = ElementPattern(0.0, 0.0)
COS_PATTERN = ElementPattern(0.0, 1.0)


@dataclass(frozen=True)
class GainResult:
    """A gain value with the direction/spread and method it belongs to."""

    value: float
    method: str                      # "quadrature" | "closed" | "physical"
    direction: tuple | None = None   # (theta, phi), radians
    spread: AngularSpread | None = None
    realized: bool = False
    efficiency: float = 1.0

    @property
    def dBi(self) -> float:
        return 10.0 * np.log10(self.value)


@dataclass(frozen=True)
class EfficiencyModel:
    """Coefficients of the embedded-radiation-efficiency estimate.

    D_e is the element directivity, a_l the retrieved linear-array
    coefficient and S_v the equivalent extra element area (wavelength^2)
    granted by the vertical dimension of a volumetric array.
    """

    D_e: float = 3.28
    a_l: float = 0.77
    S_v: float = 0.065


def _pattern_power(pattern: ElementPattern, cos_th, sin_th):
    """|element field|^2 = sin^{2u} cos^{2v}, safe for fractional exponents."""
    out = np.ones_like(np.asarray(cos_th, float))
    if pattern.u != 0:
        out = out * np.asarray(sin_th, float) ** (2.0 * pattern.u)
    if pattern.v != 0:
        out = out * (np.asarray(cos_th, float) ** 2) ** pattern.v
    return out


def _check_weights(geom: ArrayGeometry, exc: Excitation):
    if len(exc) != geom.n_elements:
        raise ValueError("excitation length does not match element count")


def total_field(geom: ArrayGeometry, exc: Excitation, pattern: ElementPattern,
                theta, phi):
    """Coherent far-field sum (E_theta, E_phi) of all element contributions.

    For the scalar (u, v) pattern model the theta component carries the
    full sin^u cos^v amplitude and E_phi is identically zero.  theta/phi
    may be arrays (broadcast together).
    """
    _check_weights(geom, exc)
    theta = np.asarray(theta, float)
    phi = np.asarray(phi, float)
    shape = np.broadcast_shapes(theta.shape, phi.shape)
    th = np.broadcast_to(theta, shape).ravel()
    ph = np.broadcast_to(phi, shape).ravel()
    pos = geom.positions
    omega = (pos[:, 0, None] * (np.sin(th) * np.cos(ph))[None, :]
             + pos[:, 1, None] * (np.sin(th) * np.sin(ph))[None, :]
             + pos[:, 2, None] * np.cos(th)[None, :])
    af = (exc.weights[:, None] * np.exp(1j * WAVENUMBER * omega)).sum(axis=0)
    if float(pattern.v) != int(pattern.v):
        raise ValueError("total_field requires integer v (signed field amplitude)")
    elem = np.sin(th) ** pattern.u * np.cos(th) ** int(pattern.v)
    e_theta = (af * elem).reshape(shape)
    return e_theta, np.zeros_like(e_theta)


def _sphere_grid(n_theta, n_phi):
    nodes, wts = np.polynomial.legendre.leggauss(n_theta)
    ct = nodes                       # cos(theta) in (-1, 1)
    st = np.sqrt(1.0 - ct ** 2)
    ph = np.arange(n_phi) * (2.0 * np.pi / n_phi)
    return ct, st, wts, ph, 2.0 * np.pi / n_phi


def radiated_power_quadrature(geom: ArrayGeometry, exc: Excitation,
                              pattern: ElementPattern,
                              n_theta: int = QUAD_N_THETA,
                              n_phi: int = QUAD_N_PHI) -> float:
    """P_rad = integral of U over the full sphere by product quadrature."""
    _check_weights(geom, exc)
    ct, st, wts, ph, dph = _sphere_grid(n_theta, n_phi)
    pos = geom.positions
    w = exc.weights
    total = 0.0
    # chunk over phi to bound the (N x n_theta x chunk) phase tensor
    chunk = max(1, int(4e6 // (pos.shape[0] * n_theta)) or 1)
    cph, sph = np.cos(ph), np.sin(ph)
    for lo in range(0, n_phi, chunk):
        hi = min(lo + chunk, n_phi)
        # Omega: (N, n_theta, hi-lo)
        omega = (pos[:, 0, None, None] * (st[None, :, None] * cph[None, None, lo:hi])
                 + pos[:, 1, None, None] * (st[None, :, None] * sph[None, None, lo:hi])
                 + pos[:, 2, None, None] * ct[None, :, None])
        af = np.einsum("n,ntp->tp", w, np.exp(1j * WAVENUMBER * omega))
        u_dir = 0.5 / _ETA * np.abs(af) ** 2 * _pattern_power(pattern, ct, st)[:, None]
        total += float((u_dir * wts[:, None]).sum() * dph)
    return total


def gain_quadrature(geom: ArrayGeometry, exc: Excitation, pattern: ElementPattern,
                    theta: float, phi: float = 0.0, check: bool = True,
                    n_theta: int = QUAD_N_THETA,
                    n_phi: int = QUAD_N_PHI) -> GainResult:
    """Gain along (theta, phi) with the radiated power done by quadrature.

    With check=True the quadrature grid is doubled once and the two power
    values must agree to QUAD_REL_TOL, otherwise QuadratureConvergenceError
    is raised.
    """
    p_rad = radiated_power_quadrature(geom, exc, pattern, n_theta, n_phi)
    if check:
        p_fine = radiated_power_quadrature(geom, exc, pattern,
                                           2 * n_theta, 2 * n_phi)
        if abs(p_fine - p_rad) > QUAD_REL_TOL * abs(p_fine):
            raise QuadratureConvergenceError(
                f"radiated power changed by {abs(p_fine - p_rad) / abs(p_fine):.2e} "
                "on grid refinement")
        p_rad = p_fine
    e_th, e_ph = total_field(geom, exc, pattern, theta, phi)
    u_dir = (np.abs(e_th) ** 2 + np.abs(e_ph) ** 2) / (2.0 * _ETA)
    value = pattern.board_factor * 4.0 * np.pi * float(u_dir) / p_rad
    return GainResult(value, "quadrature", direction=(theta, phi))


def prad_closed_isotropic(geom: ArrayGeometry, exc: Excitation) -> float:
    """Closed-form radiated power for isotropic elements (u = v = 0):

        P = (2 pi / eta) sum_mn a_m a_n e^{j(alpha_m - alpha_n)} sinc(k R_mn).
    """
    _check_weights(geom, exc)
    pos = geom.positions
    r_mn = np.linalg.norm(pos[:, None, :] - pos[None, :, :], axis=-1)
    w = exc.weights
    ssum = np.einsum("m,n,mn->", w, w.conj(), sinc_k(WAVENUMBER * r_mn))
    _check_imag_residue(ssum)
    return float(2.0 * np.pi / _ETA * ssum.real)


def _cos_pair_kernel(rho, z):
    """T(rho, z) = int_0^pi e^{jkz cos} J0(k rho sin) sin cos^2 dtheta.

    Equal to -2 d^2/d(kz)^2 [sinc(kR)]; evaluated in the closed trig form
    with a Taylor fallback below kR = 1e-4 (removable singularity).
    """
    a = WAVENUMBER * np.asarray(rho, float)
    u = WAVENUMBER * np.asarray(z, float)
    s = np.hypot(a, u)
    small = s < 1e-4
    s_safe = np.where(small, 1.0, s)
    closed = (-2.0 * (a ** 2 - 2.0 * u ** 2) * np.cos(s_safe) / s_safe ** 4
              + 2.0 * np.sin(s_safe)
              * (a ** 2 * u ** 2 + u ** 4 + a ** 2 - 2.0 * u ** 2) / s_safe ** 5)
    s2 = s ** 2
    taylor = 2.0 / 3.0 - (s2 + 2.0 * u ** 2) / 15.0 \
        + (s2 ** 2 + 4.0 * u ** 2 * s2) / 420.0
    return np.where(small, taylor, closed)


def prad_closed_cos(geom: ArrayGeometry, exc: Excitation) -> float:
    """Closed-form radiated power for the cos-shaped element (u=0, v=1)."""
    _check_weights(geom, exc)
    pos = geom.positions
    rho = np.hypot(pos[:, None, 0] - pos[None, :, 0],
                   pos[:, None, 1] - pos[None, :, 1])
    dz = pos[:, None, 2] - pos[None, :, 2]
    w = exc.weights
    ssum = np.einsum("m,n,mn->", w, w.conj(), _cos_pair_kernel(rho, dz))
    _check_imag_residue(ssum)
    return float(np.pi / _ETA * ssum.real)


def _check_imag_residue(hermitian_sum, tol=1e-10):
    mag = abs(hermitian_sum)
    if mag > 0 and abs(hermitian_sum.imag) > tol * mag:
        raise ArithmeticError(
            f"Hermitian double sum has imaginary residue {hermitian_sum.imag:3g}")


def _general_pair_integral(rho, z, u, v, ctrl: SeriesControl) -> complex:
    """theta integral for one element pair, general (u, v) pattern.

    Expands e^{jk z cos(theta)} as a power series in p; each term reduces to
    a Beta function times 1F2 evaluated at -(k rho / 2)^2.  v must be an
    integer: for fractional v the power pattern |cos|^{2v} is even in
    cos(theta) while the series parity factor assumes the signed power, so
    the reduction does not apply (use quadrature instead).  Accuracy
    degrades once k*rho or k*z reach a few tens (floating-point
    cancellation in the alternating series).
    """
    if v != int(v):
        raise ValueError("general closed form requires integer v; "
                         "use radiated_power_quadrature for fractional v")
    two_v = 2 * int(v)
    z_arg = -((WAVENUMBER * rho) / 2.0) ** 2
    kz = WAVENUMBER * z
    total = 0j
    coef = 1.0 + 0j  # (j k z)^p / p!
    for p in range(ctrl.max_terms):
        if (1 + (-1) ** (two_v + p)) // 2:
            term = coef * beta_fn(u + 1.0, v + (p + 1.0) / 2.0) \
                * hyp1f2(u + 1.0, 1.0, u + v + (p + 3.0) / 2.0, z_arg, ctrl)
            total += term
            converged = (abs(term) <= ctrl.rel_tol
                         * max(abs(total), np.finfo(float).tiny))
            if converged and p >= abs(kz):
                return total
        if kz == 0.0:
            # only p = 0 survives
            return total
        coef *= 1j * kz / (p + 1)
    raise SeriesConvergenceError(
        f"pair-integral p-series did not converge in {ctrl.max_terms} terms",
        partial=total, terms=ctrl.max_terms)


def prad_closed_general(geom: ArrayGeometry, exc: Excitation,
                        pattern: ElementPattern,
                        ctrl: SeriesControl = SeriesControl()) -> float:
    """Series closed form of the radiated power for a general (u, v) element.

    P = (pi / eta) sum_mn a_m a_n e^{j(alpha_m-alpha_n)} T_mn with the pair
    integral T_mn evaluated by the power-series / Beta / 1F2 reduction.
    """
    _check_weights(geom, exc)
    pos = geom.positions
    w = exc.weights
    n = geom.n_elements
    total = 0j
    cache = {}
    for m in range(n):
        for q in range(n):
            rho = float(np.hypot(pos[m, 0] - pos[q, 0], pos[m, 1] - pos[q, 1]))
            dz = float(pos[m, 2] - pos[q, 2])
            key = (round(rho, 12), round(dz, 12))
            if key not in cache:
                cache[key] = _general_pair_integral(rho, dz, pattern.u,
                                                    pattern.v, ctrl)
            total += w[m] * w[q].conj() * cache[key]
    _check_imag_residue(total, tol=1e-8)
    return float(np.pi / _ETA * total.real)


def _prad_closed(geom, exc, pattern, ctrl):
    if pattern.u == 0 and pattern.v == 0:
        return prad_closed_isotropic(geom, exc)
    if pattern.u == 0 and pattern.v == 1:
        return prad_closed_cos(geom, exc)
    return prad_closed_general(geom, exc, pattern, ctrl)


def gain_closed(geom: ArrayGeometry, exc: Excitation, pattern: ElementPattern,
                theta_m: float, phi_m: float = 0.0,
                ctrl: SeriesControl = SeriesControl()) -> GainResult:
    """Closed-form gain in the steered direction (theta_m, phi_m).

    Assumes the excitation phases are matched along (theta_m, phi_m), so
    the radiation intensity there is

        U_max = sin^{2u}(theta_m) cos^{2v}(theta_m) (sum a_n)^2 / (2 eta).
    """
    _check_weights(geom, exc)
    st, ct = np.sin(theta_m), np.cos(theta_m)
    u_max = _pattern_power(pattern, ct, st) * exc.amplitude.sum() ** 2 / (2.0 * _ETA)
    p_rad = _prad_closed(geom, exc, pattern, ctrl)
    value = pattern.board_factor * 4.0 * np.pi * float(u_max) / p_rad
    return GainResult(value, "closed", direction=(theta_m, phi_m))


# ---------------------------------------------------------------------------
# physical (effective-aperture) gain
# ---------------------------------------------------------------------------

def effective_area(geom: ArrayGeometry, theta: float, phi: float = 0.0) -> float:
    """Projected effective aperture along (theta, phi), wavelength^2.

    linear      0.68 * L_x * cos(theta)
    planar      L_x * L_y * cos(theta)
    volumetric  L_x L_y cos + L_x L_z sin sin(phi) + L_y L_z sin cos(phi)
    """
    ct, st = np.cos(theta), np.sin(theta)
    if geom.kind == LINEAR:
        return float(LINEAR_EFFECTIVE_WIDTH * geom.L_x * ct)
    if geom.kind == PLANAR:
        return float(geom.L_x * geom.L_y * ct)
    return float(geom.L_x * geom.L_y * ct
                 + geom.L_x * geom.L_z * st * np.sin(phi)
                 + geom.L_y * geom.L_z * st * np.cos(phi))


def average_effective_area(geom: ArrayGeometry, spread: AngularSpread) -> float:
    """Average of effective_area over the angular spread, in closed form.

    The average is taken uniformly in theta and phi (not in solid angle),
    which integrates sin/cos terms to the (1 - cos theta_0) and sin(phi_0)
    factors below.  phi_0 -> 0 is handled by its analytic limit.
    """
    th0 = spread.theta_0
    ph0 = spread.phi_0
    base = np.sin(th0) / th0
    if geom.kind == LINEAR:
        return float(LINEAR_EFFECTIVE_WIDTH * geom.L_x * base)
    if geom.kind == PLANAR:
        return float(geom.L_x * geom.L_y * base)
    if ph0 == 0.0:
        sin_avg, cos_avg = 0.0, 1.0  # limits of (1-cos p0)/p0 and sin(p0)/p0
    else:
        sin_avg = (1.0 - np.cos(ph0)) / ph0
        cos_avg = np.sin(ph0) / ph0
    vert = (1.0 - np.cos(th0)) / th0
    return float(geom.L_x * geom.L_y * base
                 + geom.L_x * geom.L_z * vert * sin_avg
                 + geom.L_y * geom.L_z * vert * cos_avg)


def gain_physical(geom: ArrayGeometry, theta: float, phi: float = 0.0) -> GainResult:
    """Aperture-limit gain 4 pi A_e / lambda^2 (board assumed by the model)."""
    return GainResult(4.0 * np.pi * effective_area(geom, theta, phi),
                      "physical", direction=(theta, phi))


def element_area(geom: ArrayGeometry) -> float:
    """Area budget of one element, wavelength^2.

    Linear arrays use the 0.68-wavelength effective strip width; planar and
    volumetric arrays use the fixed 0.5-wavelength y pitch.
    """
    width = LINEAR_EFFECTIVE_WIDTH if geom.kind == LINEAR else 0.5
    return width * geom.L_x / geom.N_x


def embedded_efficiency(geom: ArrayGeometry,
                        model: EfficiencyModel = EfficiencyModel()) -> float:
    """Embedded radiation efficiency of an array element, clamped to (0, 1].

    linear      a_l * sqrt(4 pi S_e / D_e)
    planar      4 pi S_e / D_e
    volumetric  4 pi (S_e + S_v) / D_e
    """
    s_e = element_area(geom)
    if geom.kind == LINEAR:
        e = model.a_l * np.sqrt(4.0 * np.pi * s_e / model.D_e)
    elif geom.kind == PLANAR:
        e = 4.0 * np.pi * s_e / model.D_e
    else:
        e = 4.0 * np.pi * (s_e + model.S_v) / model.D_e
    return float(min(e, 1.0))


def average_gain(geom: ArrayGeometry, pattern: ElementPattern,
                 spread: AngularSpread, n_steer: int = 13,
                 phi_m: float = 0.0, method: str = "closed",
                 model: EfficiencyModel = EfficiencyModel(),
                 realized: bool = False,
                 ctrl: SeriesControl = SeriesControl()) -> GainResult:
    """Mean gain over steering directions spanning the angular spread.

    method="closed" steers the array at n_steer angles uniformly spaced in
    [0, theta_0] (scan plane phi_m) and averages the closed-form gains;
    method="physical" returns 4 pi <A_e> / lambda^2 from the closed-form
    average aperture.  With realized=True the embedded efficiency of the
    geometry multiplies the result.
    """
    eff = embedded_efficiency(geom, model) if realized else 1.0
    if method == "physical":
        value = 4.0 * np.pi * average_effective_area(geom, spread) * eff
        return GainResult(value, "physical", spread=spread,
                          realized=realized, efficiency=eff)
    if method != "closed":
        raise ValueError("method must be 'closed' or 'physical'")
    if n_steer < 2:
        raise ValueError("n_steer must be >= 2")
    thetas = np.linspace(0.0, spread.theta_0, n_steer)
    gains = []
    for th in thetas:
        exc = steer_excitation(geom, th, phi_m)
        gains.append(gain_closed(geom, exc, pattern, th, phi_m, ctrl).value)
    return GainResult(float(np.mean(gains)) * eff, "closed", spread=spread,
                      realized=realized, efficiency=eff)


def average_realized_gain(geom: ArrayGeometry, pattern: ElementPattern,
                          model: EfficiencyModel, spread: AngularSpread,
                          n_steer: int = 13, method: str = "closed",
                          phi_m: float = 0.0) -> GainResult:
    """Average gain over the spread times the embedded efficiency."""
    return average_gain(geom, pattern, spread, n_steer=n_steer, phi_m=phi_m,
                        method=method, model=model, realized=True)
