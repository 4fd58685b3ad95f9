"""Scenario configuration: physical constants and system dimensions."""

from dataclasses import dataclass, replace
from typing import List, Optional

LIGHT_SPEED = 3.0e8  # m/s

DEFAULT_CARRIER_FREQ_HZ = 1.2e9
DEFAULT_SAMPLE_DURATION_S = 0.4e-3
DEFAULT_NOISE_DBM = -96.0
DEFAULT_TRAIN_SPEED_KMH = 300.0
# Noise-limited operating point: large enough interference would swamp the
# geometry trends the deployment is designed around.
DEFAULT_UPLINK_POWER_W = 1e-5


def dbm_to_watts(dbm: float) -> float:
    """Convert a dBm level to watts: 10^(dbm/10) mW."""
    return 10.0 ** (dbm / 10.0) / 1000.0


def kmh_to_mps(kmh: float) -> float:
    return kmh / 3.6


def mps_to_kmh(mps: float) -> float:
    return mps * 3.6


@dataclass
class ScenarioConfig:
    """One static snapshot of the railway deployment.

    APs sit at height ``vertical_distance`` above the track; each carries a
    single antenna slidable over ``num_positions`` slots spaced
    ``position_step`` metres apart (rail span = num_positions * position_step).
    Train antennas sit on a ``train_length`` m train parked at
    ``train_offset`` along the railway.
    """

    num_aps: int = 30
    num_tas: int = 8
    num_positions: int = 10
    position_step: float = 0.125       # m; default is half a wavelength at 1.2 GHz
    vertical_distance: float = 50.0    # m
    railway_length: float = 1000.0     # m
    train_length: float = 300.0        # m
    train_offset: Optional[float] = None  # m; None = centered on the railway
    carrier_freq: float = DEFAULT_CARRIER_FREQ_HZ   # Hz
    sample_duration: float = DEFAULT_SAMPLE_DURATION_S  # s
    train_speed: float = kmh_to_mps(DEFAULT_TRAIN_SPEED_KMH)  # m/s
    light_speed: float = LIGHT_SPEED   # m/s
    noise_power: float = dbm_to_watts(DEFAULT_NOISE_DBM)  # W
    uplink_powers: Optional[List[float]] = None  # W per TA; None = 0.1 W each
    pathloss_ref: float = 1e-12        # gain at 1 km
    pathloss_exp: float = 3.0
    bandwidth: float = 20e6            # Hz; informational only
    layout: str = "midpoint"           # "midpoint" | "uniform" (seeded random)
    layout_seed: int = 0

    def __post_init__(self):
        if self.train_offset is None:
            self.train_offset = (self.railway_length - self.train_length) / 2.0
        if self.uplink_powers is None:
            self.uplink_powers = [DEFAULT_UPLINK_POWER_W] * self.num_tas

    @property
    def wavelength(self) -> float:
        return self.light_speed / self.carrier_freq

    @property
    def rail_span(self) -> float:
        """Total length available to each movable antenna (m)."""
        return self.num_positions * self.position_step

    @property
    def doppler_displacement(self) -> float:
        """Maximum normalized Doppler offset f*v*T/c, in wavelengths."""
        return self.carrier_freq * self.train_speed * self.sample_duration / self.light_speed

    def validate(self) -> None:
        """Raise ValueError naming the first violated invariant."""
        if self.num_aps < 1:
            raise ValueError("num_aps must be >= 1")
        if self.num_tas < 1:
            raise ValueError("num_tas must be >= 1")
        if self.num_positions < 1:
            raise ValueError("num_positions must be >= 1")
        if self.position_step <= 0:
            raise ValueError("position_step must be > 0")
        if self.vertical_distance <= 0:
            raise ValueError("vertical_distance must be > 0")
        if self.railway_length <= 0:
            raise ValueError("railway_length must be > 0")
        if self.train_length <= 0:
            raise ValueError("train_length must be > 0")
        if self.train_offset < 0:
            raise ValueError("train_offset must be >= 0")
        if self.train_offset + self.train_length > self.railway_length * (1 + 1e-12):
            raise ValueError("train_offset + train_length must not exceed railway_length")
        if self.carrier_freq <= 0:
            raise ValueError("carrier_freq must be > 0")
        if self.sample_duration <= 0:
            raise ValueError("sample_duration must be > 0")
        if self.train_speed < 0:
            raise ValueError("train_speed must be >= 0")
        if self.noise_power <= 0:
            raise ValueError("noise_power must be > 0")
        if len(self.uplink_powers) != self.num_tas:
            raise ValueError("uplink_powers must have one entry per TA")
        if any(p < 0 for p in self.uplink_powers):
            raise ValueError("uplink_powers must be >= 0")
        if self.pathloss_ref <= 0:
            raise ValueError("pathloss_ref must be > 0")
        if self.layout not in ("midpoint", "uniform"):
            raise ValueError("layout must be 'midpoint' or 'uniform'")

    def with_overrides(self, **kwargs) -> "ScenarioConfig":
        return replace(self, **kwargs)
