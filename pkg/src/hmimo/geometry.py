"""Array topologies, element placement, and excitation synthesis.

All lengths are expressed in wavelengths, so the free-space wavenumber is
the fixed constant k = 2*pi.  Three canonical topologies are supported:

* linear   -- N_x elements on the x axis spanning L_x,
* planar   -- N_x by N_y grid in the z = 0 plane, y pitch fixed at 0.5,
* volumetric -- planar grid with a checkerboard height offset dz between
  neighbouring elements.

Element indexing is row-major over (x index, y index) so position/weight
pairing is deterministic.
"""

from __future__ import annotations

import io
from dataclasses import dataclass

import numpy as np

WAVENUMBER = 2.0 * np.pi

LINEAR = "linear"
PLANAR = "planar"
VOLUMETRIC = "volumetric"
_KINDS = (LINEAR, PLANAR, VOLUMETRIC)

Y_PITCH = 0.5  # fixed element spacing along y for planar/volumetric arrays


@dataclass(frozen=True)
class ArrayGeometry:
    """Element positions plus the topology metadata they were built from."""

    kind: str
    L_x: float
    L_y: float
    L_z: float
    N_x: int
    N_y: int
    dy: float
    dz_offset: float
    positions: np.ndarray  # (N, 3) wavelengths

    @property
    def n_elements(self) -> int:
        return self.positions.shape[0]

    @property
    def spacing_x(self) -> float:
        """Centre-to-centre spacing along x (L_x for a single element)."""
        if self.N_x <= 1:
            return self.L_x
        return self.L_x / (self.N_x - 1)

    @property
    def centroid(self) -> np.ndarray:
        return self.positions.mean(axis=0)

    def circumradius(self) -> float:
        """Largest element distance from the centroid."""
        return float(np.linalg.norm(self.positions - self.centroid, axis=1).max())

    def dump_table(self) -> str:
        """Plain-text table of element positions: index, x, y, z."""
        out = io.StringIO()
        out.write("# index x_lambda y_lambda z_lambda\n")
        for i, (x, y, z) in enumerate(self.positions):
            out.write(f"{i} {x:.9g} {y:.9g} {z:.9g}\n")
        return out.getvalue()


@dataclass(frozen=True)
class Excitation:
    """Per-element complex weights split into amplitude and phase."""

    amplitude: np.ndarray  # a_n >= 0
    phase: np.ndarray      # alpha_n, radians
    strategy: str = "uniform"
    params: tuple = ()

    @property
    def weights(self) -> np.ndarray:
        """Complex weights a_n * exp(j alpha_n)."""
        return self.amplitude * np.exp(1j * self.phase)

    def __len__(self) -> int:
        return self.amplitude.shape[0]


@dataclass(frozen=True)
class AngularSpread:
    """Cone of steering directions theta in [0, theta_0], phi in [0, phi_0]."""

    theta_0: float
    phi_0: float = 0.0

    def __post_init__(self):
        if not 0 < self.theta_0 <= np.pi / 2:
            raise ValueError("theta_0 must lie in (0, pi/2]")
        if not 0 <= self.phi_0 <= 2 * np.pi:
            raise ValueError("phi_0 must lie in [0, 2*pi]")


def build_geometry(kind: str, L_x: float, L_y: float = 0.0, N_x: int = 1,
                   dz_offset: float = 1.0) -> ArrayGeometry:
    """Construct one of the canonical array topologies.

    Parameters
    ----------
    kind : {"linear", "planar", "volumetric"}
    L_x : float
        Edge-to-edge aperture along x, wavelengths.
    L_y : float
        Edge-to-edge aperture along y (ignored for linear arrays).
    N_x : int
        Element count along x.  Elements are uniformly spaced with pitch
        L_x/(N_x - 1); a single element sits at the origin.
    dz_offset : float
        Checkerboard height offset for volumetric arrays, wavelengths.
    """
    if kind not in _KINDS:
        raise ValueError(f"unknown topology kind: {kind!r}")
    if L_x <= 0:
        raise ValueError("L_x must be positive")
    if N_x < 1:
        raise ValueError("N_x must be >= 1")
    if kind != LINEAR and L_y <= 0:
        raise ValueError("L_y must be positive for planar/volumetric arrays")
    if kind == VOLUMETRIC and dz_offset < 0:
        raise ValueError("dz_offset must be non-negative")

    if N_x == 1:
        xs = np.array([0.0])
    else:
        xs = np.arange(N_x) * (L_x / (N_x - 1))

    if kind == LINEAR:
        pos = np.zeros((N_x, 3))
        pos[:, 0] = xs
        pos.flags.writeable = False
        return ArrayGeometry(kind, L_x, 0.0, 0.0, N_x, 1, 0.0, 0.0, pos)

    N_y = int(np.floor(L_y / Y_PITCH)) + 1
    ys = np.arange(N_y) * Y_PITCH
    ix, iy = np.meshgrid(np.arange(N_x), np.arange(N_y), indexing="ij")
    pos = np.zeros((N_x * N_y, 3))
    pos[:, 0] = xs[ix.ravel()]
    pos[:, 1] = ys[iy.ravel()]
    if kind == VOLUMETRIC:
        # checkerboard over the (x, y) index grid; dz pattern is therefore
        # independent of traversal order
        pos[:, 2] = dz_offset * ((ix.ravel() + iy.ravel()) % 2)
        pos.flags.writeable = False
        return ArrayGeometry(VOLUMETRIC, L_x, L_y, dz_offset, N_x, N_y,
                             Y_PITCH, dz_offset, pos)
    pos.flags.writeable = False
    return ArrayGeometry(PLANAR, L_x, L_y, 0.0, N_x, N_y, Y_PITCH, 0.0, pos)


def direction_cosine(positions: np.ndarray, theta, phi) -> np.ndarray:
    """Path-length factor Omega_n(theta, phi) for each element, wavelengths.

    Omega_n = x_n sin(theta) cos(phi) + y_n sin(theta) sin(phi) + z_n cos(theta).
    Broadcasts over array-valued (theta, phi).
    """
    st, ct = np.sin(theta), np.cos(theta)
    return (positions[:, 0] * st * np.cos(phi)
            + positions[:, 1] * st * np.sin(phi)
            + positions[:, 2] * ct)


def uniform_excitation(geom: ArrayGeometry) -> Excitation:
    """Unit amplitudes, zero phases."""
    n = geom.n_elements
    return Excitation(np.ones(n), np.zeros(n), "uniform")


def steer_excitation(geom: ArrayGeometry, theta_m: float, phi_m: float = 0.0) -> Excitation:
    """Far-field steering: phases matched along direction (theta_m, phi_m).

    alpha_n = -k * Omega_n(theta_m, phi_m), so every element contribution is
    in phase in the steered direction.
    """
    if not (np.isfinite(theta_m) and np.isfinite(phi_m)):
        raise ValueError("steering angles must be finite")
    n = geom.n_elements
    phase = -WAVENUMBER * direction_cosine(geom.positions, theta_m, phi_m)
    return Excitation(np.ones(n), np.asarray(phase, float),
                      "steer", (float(theta_m), float(phi_m)))


def focus_excitation(geom: ArrayGeometry, r_f) -> Excitation:
    """Near-field focusing by phase conjugation at point r_f.

    alpha_n = +k |r_f - r_n|, which puts every scalar-Green contribution at
    r_f exactly in phase.
    """
    r_f = np.asarray(r_f, float)
    if r_f.shape != (3,):
        raise ValueError("focus point must be a 3-vector")
    dist = np.linalg.norm(geom.positions - r_f, axis=1)
    if np.any(dist == 0):
        raise ValueError("focus point coincides with an array element")
    return Excitation(np.ones(geom.n_elements), WAVENUMBER * dist,
                      "focus", tuple(float(c) for c in r_f))
