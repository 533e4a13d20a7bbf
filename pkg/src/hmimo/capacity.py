"""Capacity evaluation under equal power allocation, and the paper-style sweeps.

capacity_once is the deterministic log-det formula; ergodic_capacity wraps
it in a seeded Monte Carlo over Kronecker-model realizations.  The sweep
helpers reproduce the three experiment families at desk scale: quasi-static
fading capacity versus element count, ergodic capacity with embedded
antenna efficiency, and deterministic near-field capacity versus link
range under competing normalizations.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import channel as ch
from . import farfield as ff
from . import nearfield as nf
from .geometry import (AngularSpread, ArrayGeometry, build_geometry,
                       focus_excitation, steer_excitation)

DEFAULT_SNR_DB = 10.0


@dataclass(frozen=True)
class CapacityConfig:
    """Monte Carlo controls: linear SNR, realization count, root seed."""

    gamma: float
    n_realizations: int = 2000
    seed: int = 0

    def __post_init__(self):
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.n_realizations < 1:
            raise ValueError("n_realizations must be >= 1")


def snr_db_to_linear(snr_db: float) -> float:
    return 10.0 ** (snr_db / 10.0)


def capacity_once(h: np.ndarray, gamma: float) -> float:
    """BLAST capacity log2 det(I + gamma/N_t * H H^dagger), bits/s/Hz.

    Computed from the eigenvalues of the smaller Gram matrix; tiny negative
    eigenvalues (>= -1e-12 relative) are clamped to zero.
    """
    h = np.asarray(h)
    if not np.all(np.isfinite(h)):
        raise ValueError("channel matrix must be finite")
    n_t = h.shape[1]
    gram = h.conj().T @ h if h.shape[1] <= h.shape[0] else h @ h.conj().T
    w = np.linalg.eigvalsh(gram)
    scale = max(w.max(initial=0.0), 1.0)
    if w.min(initial=0.0) < -1e-12 * scale:
        raise ArithmeticError("Gram matrix has a significantly negative eigenvalue")
    w = np.clip(w, 0.0, None)
    return float(np.log2(1.0 + gamma / n_t * w).sum())


def _capacity_batch(h_batch: np.ndarray, gamma: float) -> np.ndarray:
    """capacity_once over a stacked batch (B, N_r, N_t)."""
    n_t = h_batch.shape[2]
    if n_t <= h_batch.shape[1]:
        gram = h_batch.conj().transpose(0, 2, 1) @ h_batch
    else:
        gram = h_batch @ h_batch.conj().transpose(0, 2, 1)
    w = np.clip(np.linalg.eigvalsh(gram), 0.0, None)
    return np.log2(1.0 + gamma / n_t * w).sum(axis=1)


def realization_rng(seed: int, index: int) -> np.random.Generator:
    """Generator for one fading realization, keyed by (root seed, counter)."""
    return np.random.default_rng(np.random.SeedSequence((int(seed), int(index))))


def fading_capacity(rr_sqrt: np.ndarray, n_tx: int, norm_target: float,
                    cfg: CapacityConfig, batch: int = 256) -> tuple[float, float]:
    """Mean and standard error of capacity over normalized Rayleigh fades.

    Each realization is H = RR_SQRT @ H_w rescaled to the Frobenius target,
    with H_w i.i.d. complex Gaussian.  Realization i is a pure function of
    (cfg.seed, i), so results do not depend on batch size or on how work is
    scheduled across threads.
    """
    n_rx = rr_sqrt.shape[0]
    caps = np.empty(cfg.n_realizations)
    done = 0
    while done < cfg.n_realizations:
        b = min(batch, cfg.n_realizations - done)
        h_w = np.empty((b, n_rx, n_tx), complex)
        for i in range(b):
            h_w[i] = ch.complex_gaussian(realization_rng(cfg.seed, done + i),
                                         (n_rx, n_tx))
        h = rr_sqrt @ h_w
        norms = np.sqrt((np.abs(h) ** 2).sum(axis=(1, 2)))
        h *= (np.sqrt(norm_target) / norms)[:, None, None]
        caps[done:done + b] = _capacity_batch(h, cfg.gamma)
        done += b
    mean = float(np.mean(caps))
    stderr = float(np.std(caps, ddof=1) / np.sqrt(cfg.n_realizations)) \
        if cfg.n_realizations > 1 else 0.0
    return mean, stderr


def ergodic_capacity(r_t: np.ndarray, r_r: np.ndarray,
                     policy: ch.NormalizationPolicy, gains: dict,
                     cfg: CapacityConfig) -> tuple[float, float]:
    """Monte Carlo ergodic capacity of the Kronecker model under a policy.

    Every realization is normalized per the policy before the capacity
    formula is applied.  Realization i is a pure function of (cfg.seed, i).
    """
    caps = np.empty(cfg.n_realizations)
    rr_sqrt = ch.matrix_sqrt_psd(r_r)
    rt_sqrt = ch.matrix_sqrt_psd(r_t)
    n_r, n_t = r_r.shape[0], r_t.shape[0]
    for i in range(cfg.n_realizations):
        h_w = ch.complex_gaussian(realization_rng(cfg.seed, i), (n_r, n_t))
        h = rr_sqrt @ h_w @ rt_sqrt
        h_n = ch.normalize(h, policy, gains)
        caps[i] = capacity_once(h_n.matrix, cfg.gamma)
    mean = float(np.mean(caps))
    stderr = float(np.std(caps, ddof=1) / np.sqrt(cfg.n_realizations)) \
        if cfg.n_realizations > 1 else 0.0
    return mean, stderr


# ---------------------------------------------------------------------------
# experiment sweeps
# ---------------------------------------------------------------------------

SCAN_SPREAD = AngularSpread(np.deg2rad(60.0), np.pi)

# rich-multipath environment: uniform arrivals over the whole sphere.  The
# +-60 degree cone (one- or two-sided) is available through
# channel.AngularPowerSpectrum for narrower environments.
DEFAULT_SPECTRUM = ch.FULL_SPHERE


def _norm_target(policy: ch.NormalizationPolicy, n_tx: int, n_rx: int,
                 g_r: float) -> float:
    if policy.kind == ch.TRADITIONAL:
        return float(n_tx * n_rx)
    if policy.kind == ch.TX_NC_RX_C:
        if g_r is None or not np.isfinite(g_r):
            raise ValueError("tx_nc_rx_c target needs a finite receive gain")
        return float(n_tx * g_r * policy.gain_scale)
    raise ValueError(f"sweep supports traditional/tx_nc_rx_c, got {policy.kind}")


def receive_gain(geom: ArrayGeometry, method: str, spread: AngularSpread,
                 realized: bool, pattern: ff.ElementPattern | None = None,
                 model: ff.EfficiencyModel = ff.EfficiencyModel(),
                 n_steer: int = 13) -> float:
    """Average (realized) array gain over the scan spread for normalization."""
    pattern = pattern or ff.ElementPattern(0.0, 1.0, 2.0)
    return ff.average_gain(geom, pattern, spread, n_steer=n_steer,
                           method=method, model=model, realized=realized).value


def fading_sweep(topology: str, n_x_values, policies, gain_methods,
                 n_users: int, snr_db: float, n_realizations: int, seed: int,
                 L_x: float = 5.0, L_y: float = 5.0, dz_offset: float = 1.0,
                 include_efficiency: bool = False,
                 spread: AngularSpread = SCAN_SPREAD,
                 pattern: ff.ElementPattern | None = None,
                 model: ff.EfficiencyModel = ff.EfficiencyModel(),
                 spectrum: ch.AngularPowerSpectrum | None = None) -> list[dict]:
    """Capacity vs element count for one topology under several policies.

    Models the BLAST uplink: n_users uncorrelated single-antenna users, the
    array under test receiving.  The receive correlation comes from the
    element patterns under the angular power spectrum (rich-multipath full
    sphere by default).  With include_efficiency the normalization targets
    use realized average gains; the per-element efficiencies are uniform
    across an array, so the equivalent Schur loss matrix would be absorbed
    by the per-realization norm and is not applied separately.

    One row per (N_x, policy, gain method); the traditional policy ignores
    the gain method and is emitted once per N_x with method "none".
    """
    pattern = pattern or ff.ElementPattern(0.0, 1.0, 2.0)
    gamma = snr_db_to_linear(snr_db)
    if spectrum is None:
        spectrum = DEFAULT_SPECTRUM
    rows = []
    for idx, n_x in enumerate(n_x_values):
        geom = build_geometry(topology, L_x, L_y, int(n_x), dz_offset)
        r_r = ch.correlation_matrix(geom, pattern, spectrum)
        eff = ff.embedded_efficiency(geom, model)
        rr_sqrt = ch.matrix_sqrt_psd(r_r)
        gains = {m: receive_gain(geom, m, spread,
                                 realized=include_efficiency,
                                 pattern=pattern, model=model)
                 for m in gain_methods}
        for policy in policies:
            methods = ["none"] if policy.kind == ch.TRADITIONAL else gain_methods
            for method in methods:
                g_r = gains.get(method)
                target = _norm_target(policy, n_users, geom.n_elements, g_r)
                cfg = CapacityConfig(gamma, n_realizations,
                                     seed=_point_seed(seed, idx, policy.kind, method))
                mean, err = fading_capacity(rr_sqrt, n_users, target, cfg)
                rows.append({
                    "topology": topology, "policy": policy.kind,
                    "method": method, "N_x": int(n_x),
                    "spacing_lambda": geom.spacing_x,
                    "snr_dB": snr_db, "capacity_mean": mean,
                    "capacity_stderr": err, "gain_target": g_r,
                    "efficiency": eff if include_efficiency else 1.0,
                    "seed": cfg.seed,
                })
    return rows


def _point_seed(root: int, *parts) -> int:
    """Stable per-point seed derived from the root seed and point identity."""
    h = int(root) & 0xFFFFFFFFFFFFFFFF
    for part in parts:
        for b in str(part).encode():
            h = ((h * 1099511628211) ^ b) & 0xFFFFFFFFFFFFFFFF
    return h % (2 ** 63)


def nearfield_capacity_sweep(r_values, rx_topologies, modes, snr_db: float,
                             L: float = 5.0, tx_spacing: float = 0.5,
                             rx_n_x: dict | None = None,
                             gain_scale: float = 1.0 / np.pi) -> list[dict]:
    """Deterministic near-field capacity versus link range.

    A fixed planar transmit array faces each receive topology at range R.
    The co-polarized (xx) dyadic block is normalized per block policy with
    near-field transmit/receive gains computed under the given mode:

      farfield  steered excitation, gains from the far-field limit
      nf_focus  focused excitation, near gains at the opposite centroid
      nf_steer  steered excitation, near gains at the opposite centroid

    Capacity is the deterministic log-det of the normalized block.
    """
    rx_n_x = rx_n_x or {"planar": int(round(L / 0.5)) + 1,
                        "volumetric": int(round(L / 0.25)) + 1}
    tx = build_geometry("planar", L, L, int(round(L / tx_spacing)) + 1)
    policy = ch.NormalizationPolicy(ch.POLARIMETRIC_BLOCK, gain_scale)
    gamma = snr_db_to_linear(snr_db)
    rows = []
    for topology in rx_topologies:
        rx = build_geometry(topology, L, L, rx_n_x[topology])
        for r_sep in r_values:
            cm = ch.nearfield_polarimetric_channel(tx, rx, float(r_sep))
            cm_xx = ch.ChannelMatrix(blocks={"xx": cm.blocks["xx"]})
            for mode in modes:
                g_t = _link_gain(tx, r_sep, mode)
                g_r = _link_gain(rx, r_sep, mode)
                norm = ch.normalize(cm_xx, policy,
                                    {"G_t": {"xx": g_t}, "G_r": {"xx": g_r}})
                cap = capacity_once(norm.blocks["xx"], gamma)
                rows.append({
                    "topology": topology, "mode": mode,
                    "R_lambda": float(r_sep), "snr_dB": snr_db,
                    "N_tx": tx.n_elements, "N_rx": rx.n_elements,
                    "G_t": g_t, "G_r": g_r, "capacity": cap,
                })
    return rows


def _link_gain(geom: ArrayGeometry, r_sep: float, mode: str) -> float:
    """Co-polarized near-field gain of one end of a coaxial link."""
    center = geom.centroid
    target = center + np.array([0.0, 0.0, float(r_sep)])
    if mode == "farfield":
        exc = steer_excitation(geom, 0.0, 0.0)
        point = center + np.array([0.0, 0.0, nf.FAR_REFERENCE_DISTANCE])
    elif mode == "nf_focus":
        exc = focus_excitation(geom, target)
        point = target
    elif mode == "nf_steer":
        exc = steer_excitation(geom, 0.0, 0.0)
        point = target
    else:
        raise ValueError(f"unknown near-field mode: {mode!r}")
    p_total = nf.dyadic_radiated_power(geom, exc, "x")
    return nf.near_gain(geom, exc, "x", "x", point, p_total)
