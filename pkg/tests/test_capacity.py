import numpy as np
import pytest
from numpy.testing import assert_allclose

from hmimo import channel as ch
from hmimo.capacity import (CapacityConfig, capacity_once, ergodic_capacity,
                            fading_capacity, fading_sweep,
                            nearfield_capacity_sweep, snr_db_to_linear)


class TestCapacityOnce:
    def test_scalar_channel(self):
        h = np.array([[1.0 + 0j]])
        assert_allclose(capacity_once(h, 10.0), np.log2(11.0), rtol=1e-12)

    def test_rank_one_channel(self):
        # ||H||^2 = G concentrated in one eigenmode
        g = 25.0
        u = np.array([[0.6], [0.8]])
        v = np.array([[1.0, 0.0]])
        h = np.sqrt(g) * u @ v
        expected = np.log2(1.0 + 10.0 * g / 2.0)
        assert_allclose(capacity_once(h, 10.0), expected, rtol=1e-12)

    def test_identity_channel(self):
        n = 6
        assert_allclose(capacity_once(np.eye(n, dtype=complex), float(n)),
                        float(n), rtol=1e-12)

    def test_unitary_invariance(self):
        rng = np.random.default_rng(0)
        h = rng.normal(size=(5, 4)) + 1j * rng.normal(size=(5, 4))
        q, _ = np.linalg.qr(rng.normal(size=(5, 5))
                            + 1j * rng.normal(size=(5, 5)))
        w, _ = np.linalg.qr(rng.normal(size=(4, 4))
                            + 1j * rng.normal(size=(4, 4)))
        c1 = capacity_once(h, 7.0)
        c2 = capacity_once(q @ h @ w, 7.0)
        assert_allclose(c1, c2, rtol=1e-10)

    def test_monotone_in_snr(self):
        rng = np.random.default_rng(1)
        h = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        caps = [capacity_once(h, g) for g in (0.5, 2.0, 10.0, 40.0)]
        assert all(b > a for a, b in zip(caps, caps[1:]))

    def test_policy_scaling_law(self):
        # scaling the norm target by s scales every Gram eigenvalue by s
        rng = np.random.default_rng(2)
        h = rng.normal(size=(4, 3)) + 1j * rng.normal(size=(4, 3))
        s = 3.7
        gamma = 5.0
        w = np.linalg.eigvalsh(h.conj().T @ h)
        expected = np.log2(1.0 + gamma / 3 * s * w).sum()
        assert_allclose(capacity_once(np.sqrt(s) * h, gamma), expected,
                        rtol=1e-12)

    def test_rejects_non_finite(self):
        with pytest.raises(ValueError):
            capacity_once(np.array([[np.inf + 0j]]), 1.0)


class TestErgodicCapacity:
    def test_deterministic_for_seed(self):
        eye2 = np.eye(2, dtype=complex)
        policy = ch.NormalizationPolicy(ch.TRADITIONAL)
        cfg = CapacityConfig(10.0, 200, seed=5)
        m1, e1 = ergodic_capacity(eye2, eye2, policy, {}, cfg)
        m2, e2 = ergodic_capacity(eye2, eye2, policy, {}, cfg)
        assert m1 == m2 and e1 == e2

    def test_doubling_realizations_consistent(self):
        eye2 = np.eye(2, dtype=complex)
        policy = ch.NormalizationPolicy(ch.TRADITIONAL)
        m1, e1 = ergodic_capacity(eye2, eye2, policy, {},
                                  CapacityConfig(10.0, 1000, seed=3))
        m2, e2 = ergodic_capacity(eye2, eye2, policy, {},
                                  CapacityConfig(10.0, 2000, seed=4))
        assert abs(m1 - m2) < 2.0 * (e1 + e2)

    def test_fully_correlated_rx_collapses_to_simo_statistics(self):
        # rank-1 R_r: every realization has one nonzero eigenvalue, and
        # traditional normalization pins it to N_t * N_r exactly, so the
        # capacity is the deterministic log2(1 + gamma * N_r)
        n_t, n_r = 3, 4
        r_r = np.ones((n_r, n_r), dtype=complex)
        policy = ch.NormalizationPolicy(ch.TRADITIONAL)
        cfg = CapacityConfig(10.0, 200, seed=9)
        mean, err = ergodic_capacity(np.eye(n_t, dtype=complex), r_r, policy,
                                     {}, cfg)
        expected = np.log2(1.0 + 10.0 / n_t * n_t * n_r)
        assert_allclose(mean, expected, rtol=1e-9)
        assert err < 1e-9

    def test_iid_2x2_matches_brute_force_oracle(self):
        # independent oracle: vectorized closed-form 2x2 determinant over
        # 10^6 normalized draws from a different generator
        gamma = snr_db_to_linear(10.0)
        rng = np.random.default_rng(987654321)
        n = 1_000_000
        h = (rng.standard_normal((n, 2, 2))
             + 1j * rng.standard_normal((n, 2, 2))) / np.sqrt(2.0)
        scale = 4.0 / (np.abs(h) ** 2).sum(axis=(1, 2))
        gram = h @ h.conj().transpose(0, 2, 1)
        a = gram[:, 0, 0].real * scale
        d = gram[:, 1, 1].real * scale
        b = np.abs(gram[:, 0, 1]) ** 2 * scale ** 2
        det = (1 + gamma / 2 * a) * (1 + gamma / 2 * d) - (gamma / 2) ** 2 * b
        oracle_mean = float(np.mean(np.log2(det)))
        oracle_err = float(np.std(np.log2(det)) / np.sqrt(n))

        eye2 = np.eye(2, dtype=complex)
        policy = ch.NormalizationPolicy(ch.TRADITIONAL)
        mean, err = ergodic_capacity(eye2, eye2, policy, {},
                                     CapacityConfig(gamma, 4000, seed=17))
        assert abs(mean - oracle_mean) < 2.0 * (err + oracle_err)


class TestFadingCapacity:
    def test_matches_ergodic_path_for_identity(self):
        # fading_capacity (batched) and ergodic_capacity (per-realization
        # normalize) implement the same model for R_t = I
        n_t, n_r = 3, 5
        r_r = np.eye(n_r, dtype=complex)
        target = float(n_t * n_r)
        cfg = CapacityConfig(10.0, 3000, seed=11)
        m_fast, e_fast = fading_capacity(np.eye(n_r, dtype=complex), n_t,
                                         target, cfg)
        policy = ch.NormalizationPolicy(ch.TRADITIONAL)
        m_ref, e_ref = ergodic_capacity(np.eye(n_t, dtype=complex), r_r,
                                        policy, {},
                                        CapacityConfig(10.0, 3000, seed=12))
        assert abs(m_fast - m_ref) < 2.0 * (e_fast + e_ref)

    def test_batch_size_does_not_change_results(self):
        rng = np.random.default_rng(3)
        rr = np.eye(4, dtype=complex)
        cfg = CapacityConfig(10.0, 500, seed=21)
        m1, _ = fading_capacity(rr, 3, 12.0, cfg, batch=64)
        m2, _ = fading_capacity(rr, 3, 12.0, cfg, batch=501)
        assert m1 == m2


class TestSweeps:
    def test_fading_sweep_rows_and_determinism(self):
        pols = [ch.NormalizationPolicy(ch.TRADITIONAL),
                ch.NormalizationPolicy(ch.TX_NC_RX_C)]
        rows1 = fading_sweep("planar", [3, 5], pols, ["closed"], n_users=10,
                             snr_db=10.0, n_realizations=50, seed=7)
        rows2 = fading_sweep("planar", [3, 5], pols, ["closed"], n_users=10,
                             snr_db=10.0, n_realizations=50, seed=7)
        assert rows1 == rows2
        assert len(rows1) == 4  # 2 N_x times (traditional + em/closed)
        trad = [r for r in rows1 if r["policy"] == ch.TRADITIONAL]
        assert trad[0]["capacity_mean"] < trad[1]["capacity_mean"]

    def test_nearfield_sweep_modes(self):
        rows = nearfield_capacity_sweep([5.0], ["planar"],
                                        ["nf_focus", "nf_steer"], 10.0,
                                        L=2.0, tx_spacing=0.5)
        by_mode = {r["mode"]: r for r in rows}
        assert by_mode["nf_steer"]["capacity"] < by_mode["nf_focus"]["capacity"]
        assert by_mode["nf_focus"]["G_t"] > 0

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError):
            nearfield_capacity_sweep([5.0], ["planar"], ["warp"], 10.0, L=2.0)


def test_capacity_config_validation():
    with pytest.raises(ValueError):
        CapacityConfig(0.0, 10)
    with pytest.raises(ValueError):
        CapacityConfig(1.0, 0)
