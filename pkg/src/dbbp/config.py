"""Scenario configuration shared by every other module.

A :class:`ScenarioConfig` is the single source of dimensional truth: array
geometries, OFDM grids, codebook size, RF chain count and mobility
parameters all live here. Defaults reproduce the dual-band simulation
setup (3.6 GHz uplink / 26 GHz downlink, 4x4 and 8x8 BS panels, 2x2 UE
panel, K=32 / Kbar=512 subcarriers, N_rf=2, T=5, 30 km/h).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace


@dataclass(frozen=True)
class ScenarioConfig:
    """All array / OFDM / codebook / mobility parameters.

    Panels are (rows, cols) uniform planar arrays; element counts are the
    products. The mmWave BS panel rows must be divisible by ``n_rf`` so the
    panel splits into equal row-block subarrays (one per RF chain).
    """

    sub6_carrier_hz: float = 3.6e9
    mmwave_carrier_hz: float = 26e9
    sub6_bandwidth_hz: float = 20e6
    mmwave_bandwidth_hz: float = 800e6
    k: int = 32                      # sub-6 subcarriers
    kbar: int = 512                  # mmWave subcarriers
    bs_sub6_panel: tuple[int, int] = (4, 4)
    bs_mmwave_panel: tuple[int, int] = (8, 8)
    ue_mmwave_panel: tuple[int, int] = (2, 2)
    n_rf: int = 2
    codebook_size: int = 32
    t: int = 5                       # input sequence length
    ue_speed_mps: float = 30.0 / 3.6
    sample_interval_s: float = 0.1
    cluster_count: int = 8
    xpr_db: float = 8.0              # cross-polarization power ratio
    n_s: int = 2                     # data streams
    seed: int = 0

    def __post_init__(self):
        for name in ("k", "kbar", "n_rf", "codebook_size", "t",
                     "cluster_count", "n_s"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1, got {getattr(self, name)}")
        for name in ("bs_sub6_panel", "bs_mmwave_panel", "ue_mmwave_panel"):
            rows, cols = getattr(self, name)
            if rows < 1 or cols < 1:
                raise ValueError(f"{name} dims must be >= 1, got {(rows, cols)}")
        if self.n_tx % self.n_rf != 0:
            raise ValueError(
                f"mmWave BS element count {self.n_tx} not divisible by "
                f"n_rf={self.n_rf}; no subarray partition exists")
        if self.n_s > self.n_rf:
            raise ValueError(f"n_s={self.n_s} exceeds n_rf={self.n_rf}")
        if self.ue_speed_mps < 0:
            raise ValueError("ue_speed_mps must be >= 0")
        if self.sample_interval_s <= 0:
            raise ValueError("sample_interval_s must be > 0")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")

    # Derived dimensions ---------------------------------------------------

    @property
    def n_tx_sub6(self) -> int:
        return self.bs_sub6_panel[0] * self.bs_sub6_panel[1]

    @property
    def n_tx(self) -> int:
        return self.bs_mmwave_panel[0] * self.bs_mmwave_panel[1]

    @property
    def n_rx(self) -> int:
        return self.ue_mmwave_panel[0] * self.ue_mmwave_panel[1]

    @property
    def n_sub(self) -> int:
        """Antenna elements per subarray (one RF chain's block)."""
        return self.n_tx // self.n_rf

    @property
    def sub6_subcarrier_spacing_hz(self) -> float:
        return self.sub6_bandwidth_hz / self.k

    @property
    def mmwave_subcarrier_spacing_hz(self) -> float:
        return self.mmwave_bandwidth_hz / self.kbar

    @property
    def step_distance_m(self) -> float:
        """UE displacement between consecutive trajectory steps."""
        return self.ue_speed_mps * self.sample_interval_s

    @property
    def xpr_linear(self) -> float:
        return math.inf if math.isinf(self.xpr_db) else 10.0 ** (self.xpr_db / 10.0)

    def with_overrides(self, **kwargs) -> "ScenarioConfig":
        return replace(self, **kwargs)


def table1_config(**overrides) -> ScenarioConfig:
    """Full-scale default configuration."""
    return ScenarioConfig(**overrides)


def desk_config(**overrides) -> ScenarioConfig:
    """Small configuration for fast experiments and tests.

    8-beam codebook on a 4x4 mmWave panel, 2x2 sub-6 panel, K=8 / Kbar=16.
    Label search enumerates 8^4 = 4096 candidates per sample.
    """
    params = dict(
        k=8,
        kbar=16,
        bs_sub6_panel=(2, 2),
        bs_mmwave_panel=(4, 4),
        ue_mmwave_panel=(2, 2),
        n_rf=2,
        codebook_size=8,
        cluster_count=4,
        t=5,
    )
    params.update(overrides)
    return ScenarioConfig(**params)
