"""Channel-matrix construction and electromagnetic normalization.

Channel matrices are stored receive-major, shape (N_r, N_t), so user (or
transmit-port) vectors are columns.  Normalization policies pin either the
whole Frobenius norm, per-column norms, or per-polarization-block norms of
the matrix to targets built from antenna-array gains.  Gains handed to a
policy are first multiplied by the policy's gain_scale (default 1/pi),
which places the electromagnetic normalization of a half-wavelength planar
array near unit sub-channel gain without disturbing topology trends.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import ArrayGeometry, WAVENUMBER
from .farfield import ElementPattern, _pattern_power
from .nearfield import electric_dyadic

TRADITIONAL = "traditional"
TX_NC_RX_C = "tx_nc_rx_c"
TX_C_RX_C = "tx_c_rx_c"
PER_USER = "per_user"
POLARIMETRIC_BLOCK = "polarimetric_block"

_POLICY_KINDS = (TRADITIONAL, TX_NC_RX_C, TX_C_RX_C, PER_USER, POLARIMETRIC_BLOCK)

PSD_EIGENVALUE_FLOOR = -1e-10
NORM_TARGET_RTOL = 1e-10


@dataclass(frozen=True)
class NormalizationPolicy:
    """Frobenius-norm policy for channel matrices.

    kind selects the target:
      traditional          |H|_F^2 = N_t * N_r
      tx_nc_rx_c           |H|_F^2 = N_t * G_r        (BLAST uplink)
      tx_c_rx_c            |H|_F^2 = G_t * G_r        (coherent both ends)
      per_user             |h_i|^2 = G_r(theta_i)     (column-wise)
      polarimetric_block   |H_pq|_F^2 = G_t^pq * G_r^pq
    """

    kind: str
    gain_scale: float = 1.0 / np.pi

    def __post_init__(self):
        if self.kind not in _POLICY_KINDS:
            raise ValueError(f"unknown policy kind: {self.kind!r}")
        if self.gain_scale <= 0:
            raise ValueError("gain_scale must be positive")


@dataclass(frozen=True)
class ChannelMatrix:
    """A realized channel with the normalization that was applied to it."""

    matrix: np.ndarray | None = None
    blocks: dict | None = None      # polarimetric: "pq" -> (N_r, N_t) array
    policy: NormalizationPolicy | None = None
    realization_seed: int | None = None

    @property
    def n_tx(self) -> int:
        m = self.matrix if self.matrix is not None else next(iter(self.blocks.values()))
        return m.shape[1]

    @property
    def n_rx(self) -> int:
        m = self.matrix if self.matrix is not None else next(iter(self.blocks.values()))
        return m.shape[0]


@dataclass(frozen=True)
class AngularPowerSpectrum:
    """Uniform angular power spectrum over a cone about broadside, all phi.

    Support is theta in [0, theta_max]; with two_sided=True the mirror cone
    [pi - theta_max, pi] is included as well, which suits boardless element
    patterns that radiate into both hemispheres.  theta_max = pi recovers
    the isotropic full-sphere environment.  The same spectrum applies to
    both polarization components.
    """

    theta_max: float = np.pi
    two_sided: bool = False

    def __post_init__(self):
        if not 0 < self.theta_max <= np.pi:
            raise ValueError("theta_max must lie in (0, pi]")
        if self.two_sided and self.theta_max > np.pi / 2:
            raise ValueError("two-sided spectrum requires theta_max <= pi/2")


FULL_SPHERE = AngularPowerSpectrum(np.pi)


def correlation_matrix(geom: ArrayGeometry, pattern: ElementPattern,
                       spectrum: AngularPowerSpectrum = FULL_SPHERE,
                       xpd: float = 1.0,
                       n_theta: int = 96, n_phi: int = 192) -> np.ndarray:
    """Spatial correlation of array elements under an angular power spectrum.

    c_mn is the normalized angular integral of the pairwise pattern product
    kappa * E_m E_n^* P(theta, phi), with the element phase factors
    exp(j k Omega_m) embedded in the per-element patterns.  The scalar
    element model has no phi-polarized component, so the XPD factor kappa
    cancels in the ratio; it is kept in the signature for contract
    completeness.  Output is Hermitian with unit diagonal and is verified
    PSD within a -1e-10 relative eigenvalue floor (rounding-level negatives
    are clipped later by matrix_sqrt_psd where they matter).
    """
    if xpd <= 0:
        raise ValueError("xpd must be positive")
    lo = np.cos(spectrum.theta_max)
    nodes, wts = np.polynomial.legendre.leggauss(n_theta)
    ct = 0.5 * (nodes + 1.0) * (1.0 - lo) + lo          # cos(theta) in [lo, 1]
    jac = 0.5 * (1.0 - lo)
    if spectrum.two_sided:
        ct = np.concatenate([ct, -ct])
        wts = np.concatenate([wts, wts])
        n_theta = 2 * n_theta
    st = np.sqrt(np.clip(1.0 - ct ** 2, 0.0, None))
    ph = np.arange(n_phi) * (2.0 * np.pi / n_phi)
    # node weights: sin(theta) dtheta dphi = -d(cos theta) dphi
    w_node = np.repeat(wts * jac, n_phi) * (2.0 * np.pi / n_phi)

    dirs = np.empty((n_theta * n_phi, 3))
    dirs[:, 0] = np.outer(st, np.cos(ph)).ravel()
    dirs[:, 1] = np.outer(st, np.sin(ph)).ravel()
    dirs[:, 2] = np.repeat(ct, n_phi)
    gain_amp = np.sqrt(_pattern_power(pattern, np.repeat(ct, n_phi),
                                      np.repeat(st, n_phi)))
    e_mat = np.exp(1j * WAVENUMBER * (geom.positions @ dirs.T)) * gain_amp
    r = (e_mat * w_node) @ e_mat.conj().T
    d = np.sqrt(np.real(np.diag(r)))
    r = r / np.outer(d, d)
    r = 0.5 * (r + r.conj().T)
    np.fill_diagonal(r, 1.0)
    _assert_psd(r)
    return r


def _assert_psd(r, floor=PSD_EIGENVALUE_FLOOR):
    w = np.linalg.eigvalsh(r)
    scale = max(w.max(), 1.0)
    if w.min() < floor * scale:
        raise ValueError(f"matrix is not PSD: min eigenvalue {w.min():.3e}")


def matrix_sqrt_psd(r: np.ndarray, floor=PSD_EIGENVALUE_FLOOR) -> np.ndarray:
    """Hermitian square root by eigendecomposition with negative clipping."""
    w, v = np.linalg.eigh(r)
    scale = max(w.max(), 1.0)
    if w.min() < floor * scale:
        raise ValueError(f"matrix is not PSD: min eigenvalue {w.min():.3e}")
    return (v * np.sqrt(np.clip(w, 0.0, None))) @ v.conj().T


def complex_gaussian(rng: np.random.Generator, shape) -> np.ndarray:
    """Circularly symmetric complex Gaussian entries with unit variance."""
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) \
        / np.sqrt(2.0)


def kronecker_channel(r_t: np.ndarray, r_r: np.ndarray, seed: int,
                      rng: np.random.Generator | None = None) -> ChannelMatrix:
    """One Kronecker-model realization H = R_r^{1/2} H_w R_t^{1/2}.

    H_w is i.i.d. circularly symmetric complex Gaussian with unit variance,
    drawn from a generator keyed by the seed (or a caller-provided one).
    Shape is (N_r, N_t) with R_r acting on the receive side.
    """
    n_t = r_t.shape[0]
    n_r = r_r.shape[0]
    if rng is None:
        rng = np.random.default_rng(seed)
    h_w = complex_gaussian(rng, (n_r, n_t))
    h = matrix_sqrt_psd(r_r) @ h_w @ matrix_sqrt_psd(r_t)
    return ChannelMatrix(matrix=h, realization_seed=seed)


def efficiency_matrix(e: np.ndarray) -> np.ndarray:
    """Rank-one loss matrix sqrt(e) sqrt(e)^T from per-element efficiencies."""
    e = np.asarray(e, float)
    if np.any(e <= 0) or np.any(e > 1):
        raise ValueError("efficiencies must lie in (0, 1]")
    root = np.sqrt(e)
    return np.outer(root, root)


def apply_efficiency(r: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Element-wise (Schur) product R o Xi; PSD is preserved."""
    if r.shape != xi.shape:
        raise ValueError("shape mismatch between correlation and loss matrix")
    return r * xi


def nearfield_polarimetric_channel(geom_tx: ArrayGeometry,
                                   geom_rx: ArrayGeometry,
                                   r_sep: float) -> ChannelMatrix:
    """Deterministic dyadic channel between two arrays, all 3x3 polarizations.

    The receive array is re-centred on the transmit-array axis at distance
    r_sep along +z.  Block "pq" holds the field polarization p due to each
    q-polarized transmit element: (H_pq)_{ij} = G_pq(r_i^rx, r_j^tx).
    """
    tx_pos = geom_tx.positions
    rx_pos = geom_rx.positions - geom_rx.centroid + geom_tx.centroid \
        + np.array([0.0, 0.0, r_sep])
    dists = np.linalg.norm(rx_pos[:, None, :] - tx_pos[None, :, :], axis=-1)
    if dists.min() == 0.0:
        raise ValueError("transmit and receive elements overlap")
    g = electric_dyadic(rx_pos[:, None, :], tx_pos[None, :, :])  # (Nr, Nt, 3, 3)
    pols = "xyz"
    blocks = {p + q: np.ascontiguousarray(g[:, :, i, j])
              for i, p in enumerate(pols) for j, q in enumerate(pols)}
    return ChannelMatrix(blocks=blocks)


def _rescale(h, target):
    norm_sq = np.linalg.norm(h) ** 2
    if norm_sq == 0.0:
        raise ValueError("cannot normalize a zero matrix")
    return h * np.sqrt(target / norm_sq)


def normalize(h, policy: NormalizationPolicy, gains: dict | None = None,
              n_users: int | None = None) -> ChannelMatrix:
    """Scale a channel so the policy's norm target holds exactly.

    gains supplies the policy inputs: "G_r"/"G_t" scalars, "G_r_per_user"
    (array, one entry per column) for the per-user policy, or "G_t"/"G_r"
    dicts keyed by polarization pair for the block policy.  Matrix policies
    preserve singular vectors (pure scalar rescale).
    """
    gains = gains or {}
    s = policy.gain_scale

    if policy.kind == POLARIMETRIC_BLOCK:
        if not isinstance(h, ChannelMatrix) or h.blocks is None:
            raise ValueError("block policy requires a polarimetric ChannelMatrix")
        g_t, g_r = gains.get("G_t"), gains.get("G_r")
        if g_t is None or g_r is None:
            raise ValueError("block policy requires G_t and G_r gain tables")
        out = {}
        for pq, block in h.blocks.items():
            if pq not in g_t or pq not in g_r:
                raise ValueError(f"missing gain entry for block {pq!r}")
            target = (g_t[pq] * s) * (g_r[pq] * s)
            out[pq] = np.zeros_like(block) if target == 0.0 \
                else _rescale(block, target)
        return ChannelMatrix(blocks=out, policy=policy,
                             realization_seed=h.realization_seed)

    mat = h.matrix if isinstance(h, ChannelMatrix) else np.asarray(h)
    seed = h.realization_seed if isinstance(h, ChannelMatrix) else None
    n_r, n_t = mat.shape

    if policy.kind == TRADITIONAL:
        target = n_t * n_r
        return ChannelMatrix(matrix=_rescale(mat, target), policy=policy,
                             realization_seed=seed)
    if policy.kind == TX_NC_RX_C:
        if "G_r" not in gains:
            raise ValueError("tx_nc_rx_c policy requires G_r")
        target = n_t * gains["G_r"] * s
        return ChannelMatrix(matrix=_rescale(mat, target), policy=policy,
                             realization_seed=seed)
    if policy.kind == TX_C_RX_C:
        if "G_r" not in gains or "G_t" not in gains:
            raise ValueError("tx_c_rx_c policy requires G_t and G_r")
        target = (gains["G_t"] * s) * (gains["G_r"] * s)
        return ChannelMatrix(matrix=_rescale(mat, target), policy=policy,
                             realization_seed=seed)
    if policy.kind == PER_USER:
        per_user = gains.get("G_r_per_user")
        if per_user is None:
            raise ValueError("per_user policy requires G_r_per_user")
        per_user = np.asarray(per_user, float)
        if per_user.shape != (n_t,):
            raise ValueError("need one gain per user column")
        cols = np.linalg.norm(mat, axis=0)
        if np.any(cols == 0.0):
            raise ValueError("cannot normalize a zero user column")
        out = mat * np.sqrt(per_user * s / cols ** 2)
        return ChannelMatrix(matrix=out, policy=policy, realization_seed=seed)
    raise AssertionError("unreachable")


def validate_correlation(r: np.ndarray, atol: float = 1e-8):
    """Raise unless r is a unit-diagonal Hermitian PSD correlation matrix."""
    if not np.allclose(r, r.conj().T, atol=atol):
        raise ValueError("correlation matrix is not Hermitian")
    if not np.allclose(np.diag(r).real, 1.0, atol=atol):
        raise ValueError("correlation diagonal is not one")
    if np.abs(r).max() > 1.0 + 1e-6:
        raise ValueError("correlation magnitudes exceed one")
    _assert_psd(r)


def correlation_to_csv(r: np.ndarray, path: str):
    """Write a complex matrix as CSV with interleaved re,im columns."""
    n = r.shape[0]
    with open(path, "w") as fh:
        fh.write(",".join(f"re_{j},im_{j}" for j in range(n)) + "\n")
        for row in np.asarray(r):
            fh.write(",".join(f"{val.real:.9g},{val.imag:.9g}"
                              for val in row) + "\n")


def correlation_from_csv(path: str) -> np.ndarray:
    """Read a matrix written by correlation_to_csv."""
    data = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    return data[:, 0::2] + 1j * data[:, 1::2]
