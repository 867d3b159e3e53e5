import math

import numpy as np
import pytest

from dbbp.channel import (ClusterState, add_measurement_noise,
                          generate_trajectory, max_angle_drift,
                          mmwave_channel_at, sub6_channel_at, Sub6Snapshot)
from dbbp.codebook import steering_vector
from dbbp.config import desk_config, table1_config


def _cluster_fields_equal(a: ClusterState, b: ClusterState) -> bool:
    return (a.azimuth_aod_rad == b.azimuth_aod_rad
            and a.elevation_aod_rad == b.elevation_aod_rad
            and a.azimuth_aoa_rad == b.azimuth_aoa_rad
            and a.elevation_aoa_rad == b.elevation_aoa_rad
            and a.delay_s == b.delay_s
            and a.power_linear == b.power_linear
            and a.doppler_hz == b.doppler_hz
            and np.array_equal(a.polarization_coupling, b.polarization_coupling))


def test_step_spacing_matches_speed_times_interval():
    # 30 km/h at 0.1 s: 30/3.6*0.1 = 0.8333333333333334 m
    cfg = desk_config(ue_speed_mps=30.0 / 3.6, sample_interval_s=0.1)
    traj = generate_trajectory(cfg, 6)
    for i in range(5):
        a, b = traj.steps[i].location, traj.steps[i + 1].location
        d = math.hypot(b.x_m - a.x_m, b.y_m - a.y_m)
        assert abs(d - 0.8333333333333334) < 1e-9
        assert b.z_m == a.z_m


def test_zero_speed_freezes_cluster_states():
    cfg = desk_config(ue_speed_mps=0.0)
    traj = generate_trajectory(cfg, 6)
    first = traj.steps[0]
    for step in traj.steps[1:]:
        assert step.location.x_m == first.location.x_m
        assert step.location.y_m == first.location.y_m
        for c_a, c_b in zip(first.clusters, step.clusters):
            assert _cluster_fields_equal(c_a, c_b)
            assert c_b.doppler_hz == 0.0


def test_trajectory_determinism():
    cfg = desk_config(seed=123)
    t1 = generate_trajectory(cfg, 8)
    t2 = generate_trajectory(cfg, 8)
    for s1, s2 in zip(t1.steps, t2.steps):
        assert s1.location == s2.location
        for c1, c2 in zip(s1.clusters, s2.clusters):
            assert _cluster_fields_equal(c1, c2)


def test_too_few_steps_rejected():
    cfg = desk_config()
    with pytest.raises(ValueError):
        generate_trajectory(cfg, cfg.t)


def _wrapped(delta):
    return (delta + math.pi) % (2.0 * math.pi) - math.pi


@pytest.mark.parametrize("seed", [0, 5, 17])
def test_spatial_consistency_bounded_drift(seed):
    cfg = desk_config(seed=seed)
    bound = max_angle_drift(cfg)
    traj = generate_trajectory(cfg, 50)
    for i in range(len(traj) - 1):
        for c0, c1 in zip(traj.steps[i].clusters, traj.steps[i + 1].clusters):
            assert abs(_wrapped(c1.azimuth_aod_rad - c0.azimuth_aod_rad)) <= bound
            assert c1.delay_s >= 0.0 and c1.power_linear >= 0.0


def test_dual_band_congruence_shares_cluster_geometry():
    cfg = desk_config(seed=2)
    traj = generate_trajectory(cfg, 6)
    # both synthesizers read the identical ClusterState tuple per step
    step = traj.steps[3]
    aods = [c.azimuth_aod_rad for c in step.clusters]
    assert len(set(aods)) == len(aods)
    sub = sub6_channel_at(cfg, traj, 3)
    mm = mmwave_channel_at(cfg, traj, 3)
    assert sub.timestamp_s == mm.timestamp_s == step.location.timestamp_s


def test_snapshot_shapes_full_scale():
    cfg = table1_config(kbar=8)   # fewer subcarriers, same per-k shape
    traj = generate_trajectory(cfg, 6)
    sub = sub6_channel_at(cfg, traj, 0)
    assert sub.h.shape == (32, 32)            # 2*16 ports x K=32
    mm = mmwave_channel_at(cfg, traj, 0)
    assert mm.h.shape == (8, 8, 128)          # Kbar x 2*4 rx x 2*64 tx
    assert np.all(np.isfinite(sub.h)) and np.all(np.isfinite(mm.h))


def test_infinite_xpr_gives_pure_copolarized_blocks():
    cfg = desk_config(cluster_count=1, xpr_db=math.inf, seed=9)
    traj = generate_trajectory(cfg, 6)
    mm = mmwave_channel_at(cfg, traj, 0).h
    n_rx, n_tx = cfg.n_rx, cfg.n_tx
    assert np.abs(mm[:, :n_rx, n_tx:]).max() == 0.0
    assert np.abs(mm[:, n_rx:, :n_tx]).max() == 0.0
    # -45 rows of the sub-6 snapshot follow the co-polarized steering alone
    sub = sub6_channel_at(cfg, traj, 0).h
    state = traj.steps[0].clusters[0]
    steer = steering_vector(cfg.bs_sub6_panel, state.azimuth_aod_rad,
                            state.elevation_aod_rad)
    minus = sub[cfg.n_tx_sub6:, :]
    # rank-1 with spatial pattern equal to the steering vector
    for k in range(cfg.k):
        col = minus[:, k]
        assert abs(abs(np.vdot(steer, col)) -
                   np.linalg.norm(col) * np.linalg.norm(steer)) < 1e-12


def test_single_cluster_copolarized_block_is_rank_one():
    cfg = desk_config(cluster_count=1, xpr_db=math.inf, seed=4)
    traj = generate_trajectory(cfg, 6)
    mm = mmwave_channel_at(cfg, traj, 0).h
    block = mm[0, :cfg.n_rx, :cfg.n_tx]
    svals = np.linalg.svd(block, compute_uv=False)
    assert svals[0] > 0 and svals[1] / svals[0] < 1e-10


@pytest.mark.parametrize("band", ["sub6", "mmwave"])
def test_monte_carlo_normalization(band):
    cfg = desk_config()
    seeds = 1000 if band == "sub6" else 300
    acc = 0.0
    for seed in range(seeds):
        c = cfg.with_overrides(seed=seed)
        traj = generate_trajectory(c, 6)
        if band == "sub6":
            h = sub6_channel_at(c, traj, 0).h
        else:
            h = mmwave_channel_at(c, traj, 0).h
        acc += float(np.mean(np.abs(h) ** 2))
    assert 0.9 <= acc / seeds <= 1.1


def test_temporal_continuity_of_mmwave_channel():
    # two steps 1 us apart at 30 km/h stay within 1% relative change
    cfg = desk_config(sample_interval_s=1e-6, t=1, seed=3)
    traj = generate_trajectory(cfg, 2)
    h0 = mmwave_channel_at(cfg, traj, 0).h
    h1 = mmwave_channel_at(cfg, traj, 1).h
    rel = np.abs(h1 - h0).max() / np.abs(h0).max()
    assert rel < 1e-2


def test_noise_infinite_snr_is_bit_exact():
    cfg = desk_config(seed=5)
    traj = generate_trajectory(cfg, 6)
    snap = sub6_channel_at(cfg, traj, 0)
    out = add_measurement_noise(snap, math.inf, noise_seed=99)
    assert out.h is snap.h


def test_noise_power_calibration_at_zero_db():
    rng = np.random.default_rng(0)
    h = rng.standard_normal((100, 1000)) + 1j * rng.standard_normal((100, 1000))
    snap = Sub6Snapshot(h=h, timestamp_s=0.0)
    noisy = add_measurement_noise(snap, 0.0, noise_seed=42)
    ratio = np.mean(np.abs(noisy.h - h) ** 2) / np.mean(np.abs(h) ** 2)
    assert 0.95 <= ratio <= 1.05


def test_noise_determinism():
    cfg = desk_config(seed=5)
    traj = generate_trajectory(cfg, 6)
    snap = sub6_channel_at(cfg, traj, 0)
    a = add_measurement_noise(snap, 10.0, noise_seed=7)
    b = add_measurement_noise(snap, 10.0, noise_seed=7)
    assert np.array_equal(a.h, b.h)
    c = add_measurement_noise(snap, 10.0, noise_seed=8)
    assert not np.array_equal(a.h, c.h)


def test_noise_rejects_nan_snr():
    snap = Sub6Snapshot(h=np.ones((2, 2), dtype=complex), timestamp_s=0.0)
    with pytest.raises(ValueError):
        add_measurement_noise(snap, math.nan, noise_seed=0)
