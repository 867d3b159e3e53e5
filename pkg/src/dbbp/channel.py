"""Dual-band clustered channel synthesis with spatial/temporal consistency.

A trajectory carries a moving UE and a set of scattering clusters whose
geometry is shared by both bands: the same departure/arrival angles and
delays produce the sub-6 GHz uplink snapshots and the mmWave downlink
channel, which differ only in carrier-dependent phase rotation, array
response and per-band normalization. That shared geometry is what makes
the mmWave beam indices predictable from sub-6 measurements.

Consistency model
-----------------
BS-side cluster azimuths are geometric: the angle from the BS (origin) to
the UE plus a fixed per-cluster offset. The UE walks a straight line at
the configured speed and is kept outside a 25 m ring around the BS by
reflecting its heading, so the per-step azimuth drift is bounded by
``arcsin(step / 25)`` and is exactly zero at zero speed. Delays follow the
BS-UE distance times a per-cluster excess factor; elevations and UE-side
angles drift at bounded per-meter rates times the travelled distance.
Cluster powers and the 2x2 polarization coupling matrices are drawn once
per trajectory.

Everything is a pure function of (config, seed, step index); values are
immutable after construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .codebook import steering_vector
from .config import ScenarioConfig

SPEED_OF_LIGHT = 299792458.0

# Trajectory geometry (meters)
_SPAWN_RADIUS = (35.0, 150.0)    # initial UE distance from the BS
_REFLECT_RADIUS = 25.0           # heading reflects before crossing this ring
_BS_HEIGHT = 10.0
_UE_HEIGHT = 1.5

# Cluster statistics
_BS_AZ_OFFSET_RANGE = math.pi / 3.0      # per-cluster offset around the UE bearing
_BS_EL_RANGE = 0.9                       # rad
_UE_EL_RANGE = 0.5                       # rad
_EL_DRIFT_MAX = 0.02                     # rad per meter travelled
_DELAY_EXCESS_MEAN = 0.3                 # NLOS path stretch, relative
_POWER_DECAY = 0.8                       # exponential profile across clusters
_POWER_JITTER_DB = 3.0

# Sub-6 single UE antenna couples equally to both +/-45 polarizations.
_UE_POL = np.array([1.0, 1.0]) / np.sqrt(2.0)

_NOISE_SALT = 0xA5A5A5A5


@dataclass(frozen=True, eq=False)
class ClusterState:
    """One scattering cluster at one trajectory step.

    Angles are BS-side departure (aod) and UE-side arrival (aoa) for the
    mmWave downlink; the sub-6 uplink reuses the BS-side angle by
    reciprocity. ``polarization_coupling`` maps transmit (+45, -45) to
    receive (+45, -45) gains; its off-diagonal power is set by the
    configured XPR. ``doppler_hz`` is the shift at the sub-6 carrier and
    scales with the carrier ratio at mmWave.
    """

    azimuth_aod_rad: float
    elevation_aod_rad: float
    azimuth_aoa_rad: float
    elevation_aoa_rad: float
    delay_s: float
    power_linear: float
    doppler_hz: float
    polarization_coupling: np.ndarray    # (2, 2) complex128


@dataclass(frozen=True)
class LocationSample:
    x_m: float
    y_m: float
    z_m: float
    timestamp_s: float


@dataclass(frozen=True, eq=False)
class Sub6Snapshot:
    """Uplink sub-6 channel: ``h`` is (2*N_tx_sub6, K), the leading
    N_tx_sub6 rows are the +45 ports, the trailing rows the -45 ports."""

    h: np.ndarray
    timestamp_s: float


@dataclass(frozen=True, eq=False)
class MmWaveChannel:
    """Downlink mmWave channel: ``h`` is (Kbar, 2*N_rx, 2*N_tx) with the
    +45 blocks leading on both axes (co-polarized diagonal blocks,
    cross-polarized off-diagonal blocks)."""

    h: np.ndarray
    timestamp_s: float


@dataclass(frozen=True, eq=False)
class TrajectoryStep:
    location: LocationSample
    clusters: tuple[ClusterState, ...]


@dataclass(frozen=True, eq=False)
class Trajectory:
    steps: tuple[TrajectoryStep, ...]

    def __len__(self) -> int:
        return len(self.steps)


def max_angle_drift(cfg: ScenarioConfig) -> float:
    """Upper bound on per-step BS-side azimuth drift (radians)."""
    ratio = min(1.0, cfg.step_distance_m / _REFLECT_RADIUS)
    return math.asin(ratio) + 1e-12


@dataclass(frozen=True)
class _ClusterDraw:
    """Per-trajectory cluster randomness, fixed along the whole walk."""

    bs_az_offset: np.ndarray
    bs_el0: np.ndarray
    bs_el_rate: np.ndarray
    ue_az_offset: np.ndarray
    ue_el0: np.ndarray
    ue_el_rate: np.ndarray
    delay_excess: np.ndarray
    power: np.ndarray
    coupling: np.ndarray             # (C, 2, 2)


def _draw_clusters(cfg: ScenarioConfig, rng: np.random.Generator) -> _ClusterDraw:
    c = cfg.cluster_count
    xpr = cfg.xpr_linear
    cross_scale = 0.0 if math.isinf(xpr) else 1.0 / math.sqrt(xpr)
    co = (rng.standard_normal((c, 2)) + 1j * rng.standard_normal((c, 2))) / np.sqrt(2)
    cross = (rng.standard_normal((c, 2)) + 1j * rng.standard_normal((c, 2))) / np.sqrt(2)
    coupling = np.empty((c, 2, 2), dtype=np.complex128)
    coupling[:, 0, 0] = co[:, 0]
    coupling[:, 1, 1] = co[:, 1]
    coupling[:, 0, 1] = cross_scale * cross[:, 0]
    coupling[:, 1, 0] = cross_scale * cross[:, 1]

    power = np.exp(-_POWER_DECAY * np.arange(c))
    power = power * 10.0 ** (rng.standard_normal(c) * _POWER_JITTER_DB / 10.0)
    power = power / power.sum()

    return _ClusterDraw(
        bs_az_offset=rng.uniform(-_BS_AZ_OFFSET_RANGE, _BS_AZ_OFFSET_RANGE, c),
        bs_el0=rng.uniform(-_BS_EL_RANGE, _BS_EL_RANGE, c),
        bs_el_rate=rng.uniform(-_EL_DRIFT_MAX, _EL_DRIFT_MAX, c),
        ue_az_offset=rng.uniform(-math.pi, math.pi, c),
        ue_el0=rng.uniform(-_UE_EL_RANGE, _UE_EL_RANGE, c),
        ue_el_rate=rng.uniform(-_EL_DRIFT_MAX, _EL_DRIFT_MAX, c),
        delay_excess=rng.exponential(_DELAY_EXCESS_MEAN, c),
        power=power,
        coupling=coupling,
    )


def _states_at(cfg: ScenarioConfig, draw: _ClusterDraw, x: float, y: float,
               heading: float, travelled: float) -> tuple[ClusterState, ...]:
    dist = math.sqrt(x * x + y * y + (_BS_HEIGHT - _UE_HEIGHT) ** 2)
    bearing_from_bs = math.atan2(y, x)
    bearing_to_bs = math.atan2(-y, -x)
    states = []
    for c in range(cfg.cluster_count):
        az_bs = bearing_from_bs + draw.bs_az_offset[c]
        el_bs = draw.bs_el0[c] + draw.bs_el_rate[c] * travelled
        az_ue = bearing_to_bs + draw.ue_az_offset[c]
        el_ue = draw.ue_el0[c] + draw.ue_el_rate[c] * travelled
        delay = dist / SPEED_OF_LIGHT * (1.0 + draw.delay_excess[c])
        doppler = (cfg.ue_speed_mps / SPEED_OF_LIGHT * cfg.sub6_carrier_hz
                   * math.cos(az_ue - heading) * math.cos(el_ue))
        states.append(ClusterState(
            azimuth_aod_rad=az_bs,
            elevation_aod_rad=el_bs,
            azimuth_aoa_rad=az_ue,
            elevation_aoa_rad=el_ue,
            delay_s=delay,
            power_linear=float(draw.power[c]),
            doppler_hz=doppler,
            polarization_coupling=draw.coupling[c],
        ))
    return tuple(states)


def generate_trajectory(cfg: ScenarioConfig, steps: int) -> Trajectory:
    """Generate a UE walk with per-step cluster states.

    Deterministic for a fixed config seed. Consecutive locations are
    exactly ``ue_speed_mps * sample_interval_s`` apart; cluster geometry
    drifts smoothly with the displacement and is identical across steps
    when the speed is zero.
    """
    if steps < cfg.t + 1:
        raise ValueError(f"steps={steps} must be >= T+1 = {cfg.t + 1}")
    rng = np.random.default_rng(cfg.seed)
    draw = _draw_clusters(cfg, rng)
    radius = rng.uniform(*_SPAWN_RADIUS)
    angle = rng.uniform(0.0, 2.0 * math.pi)
    heading = rng.uniform(0.0, 2.0 * math.pi)
    x, y = radius * math.cos(angle), radius * math.sin(angle)

    step_d = cfg.step_distance_m
    out = []
    for i in range(steps):
        if i > 0 and step_d > 0.0:
            nx = x + step_d * math.cos(heading)
            ny = y + step_d * math.sin(heading)
            if math.hypot(nx, ny) < _REFLECT_RADIUS:
                # bounce the heading off the inner ring: flip the radial component
                rx, ry = x / math.hypot(x, y), y / math.hypot(x, y)
                dx, dy = math.cos(heading), math.sin(heading)
                dot = dx * rx + dy * ry
                dx, dy = dx - 2.0 * dot * rx, dy - 2.0 * dot * ry
                heading = math.atan2(dy, dx)
                nx = x + step_d * math.cos(heading)
                ny = y + step_d * math.sin(heading)
            x, y = nx, ny
        ts = i * cfg.sample_interval_s
        loc = LocationSample(x_m=x, y_m=y, z_m=_UE_HEIGHT, timestamp_s=ts)
        out.append(TrajectoryStep(
            location=loc,
            clusters=_states_at(cfg, draw, x, y, heading, i * step_d),
        ))
    return Trajectory(steps=tuple(out))


def _band_terms(clusters, subcarriers: int, spacing_hz: float,
                carrier_ratio: float, t: float):
    """Per-cluster amplitude/phase terms shared by both synthesizers."""
    delays = np.array([c.delay_s for c in clusters])
    powers = np.array([c.power_linear for c in clusters])
    doppler = np.array([c.doppler_hz for c in clusters]) * carrier_ratio
    k_idx = np.arange(subcarriers)
    phase = np.exp(-2j * np.pi * spacing_hz * np.outer(delays, k_idx))
    rotate = np.exp(2j * np.pi * doppler * t)
    return np.sqrt(powers)[:, None] * phase * rotate[:, None]   # (C, K)


def sub6_channel_at(cfg: ScenarioConfig, traj: Trajectory, step: int) -> Sub6Snapshot:
    """Synthesize the uplink sub-6 snapshot at one trajectory step.

    Each cluster contributes its per-polarization received gain times the
    BS array response times delay/Doppler phasors; the output is scaled so
    the expected per-entry power is one (expected squared norm per
    subcarrier equals 2*N_tx_sub6).
    """
    st = traj.steps[step]
    clusters = st.clusters
    coef = _band_terms(clusters, cfg.k, cfg.sub6_subcarrier_spacing_hz, 1.0,
                       st.location.timestamp_s)
    steer = np.stack([
        steering_vector(cfg.bs_sub6_panel, c.azimuth_aod_rad, c.elevation_aod_rad)
        for c in clusters])                                     # (C, N)
    mix = np.stack([c.polarization_coupling @ _UE_POL for c in clusters])  # (C, 2)
    inv_xpr = 0.0 if math.isinf(cfg.xpr_linear) else 1.0 / cfg.xpr_linear
    gain = math.sqrt(2.0 * cfg.n_tx_sub6 / (1.0 + inv_xpr))
    h = gain * np.einsum("ck,cp,cn->pnk", coef, mix, steer)
    return Sub6Snapshot(h=h.reshape(2 * cfg.n_tx_sub6, cfg.k),
                        timestamp_s=st.location.timestamp_s)


def mmwave_channel_at(cfg: ScenarioConfig, traj: Trajectory, step: int) -> MmWaveChannel:
    """Synthesize the downlink mmWave channel at one trajectory step.

    Shares the step's cluster geometry with :func:`sub6_channel_at`. Block
    layout per subcarrier: rows [0, N_rx) receive +45, columns [0, N_tx)
    transmit +45; the 2x2 polarization coupling scales the four blocks.
    Normalized to unit average per-entry power.
    """
    st = traj.steps[step]
    clusters = st.clusters
    ratio = cfg.mmwave_carrier_hz / cfg.sub6_carrier_hz
    coef = _band_terms(clusters, cfg.kbar, cfg.mmwave_subcarrier_spacing_hz,
                       ratio, st.location.timestamp_s)
    a_tx = np.stack([
        steering_vector(cfg.bs_mmwave_panel, c.azimuth_aod_rad, c.elevation_aod_rad)
        for c in clusters])
    a_rx = np.stack([
        steering_vector(cfg.ue_mmwave_panel, c.azimuth_aoa_rad, c.elevation_aoa_rad)
        for c in clusters])
    coupling = np.stack([c.polarization_coupling for c in clusters])
    inv_xpr = 0.0 if math.isinf(cfg.xpr_linear) else 1.0 / cfg.xpr_linear
    gain = math.sqrt(2.0 * cfg.n_rx * cfg.n_tx / (1.0 + inv_xpr))
    h = gain * np.einsum("ck,cpq,cm,cn->kpmqn", coef, coupling, a_rx, a_tx.conj())
    h = h.reshape(cfg.kbar, 2 * cfg.n_rx, 2 * cfg.n_tx)
    return MmWaveChannel(h=h, timestamp_s=st.location.timestamp_s)


def add_measurement_noise(snapshot: Sub6Snapshot, snr_db: float,
                          noise_seed: int) -> Sub6Snapshot:
    """Add circular complex Gaussian noise at the given SNR.

    Per-entry noise variance is the snapshot's mean per-entry power over
    10^(snr_db/10). ``snr_db = inf`` returns the input unchanged
    (bit-exact). Deterministic for a fixed seed.
    """
    if math.isinf(snr_db) and snr_db > 0:
        return snapshot
    if not math.isfinite(snr_db):
        raise ValueError(f"snr_db must be finite or +inf, got {snr_db}")
    sig_power = float(np.mean(np.abs(snapshot.h) ** 2))
    var = sig_power / 10.0 ** (snr_db / 10.0)
    rng = np.random.default_rng(noise_seed)
    noise = math.sqrt(var / 2.0) * (rng.standard_normal(snapshot.h.shape)
                                    + 1j * rng.standard_normal(snapshot.h.shape))
    return Sub6Snapshot(h=snapshot.h + noise, timestamp_s=snapshot.timestamp_s)


def noise_seed_for(sample_seed: int, step: int) -> int:
    """Noise stream id for one input snapshot, decoupled from the
    trajectory stream."""
    return (sample_seed ^ _NOISE_SALT) + step
