"""Scenario and propagation parameter containers plus JSON config loading."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

SPEED_OF_LIGHT = 299_792_458.0

# Encoding used for zero/absent gains and interference in observations.
GAIN_FLOOR_DB = -160.0


class ConfigError(ValueError):
    """Raised when a scenario configuration violates an invariant."""

    def __init__(self, field_name: str, message: str):
        self.field_name = field_name
        super().__init__(f"{field_name}: {message}")


@dataclass
class ChannelParams:
    """Large-scale propagation parameters.

    Exponents and shadowing sigmas are keyed by link class: v2i uplinks,
    v2v pairs, sensing echoes, and node-RIS segments.  ``pathloss_const``
    is the linear power gain at the 1 m reference distance.
    """

    pathloss_const: float = 1e-3
    exponent_v2i: float = 3.0
    exponent_v2v: float = 3.68
    exponent_sense: float = 3.0
    exponent_ris: float = 2.2
    shadow_sigma_v2i_db: float = 8.0
    shadow_sigma_v2v_db: float = 3.0
    shadow_sigma_sense_db: float = 8.0
    shadow_sigma_ris_db: float = 8.0
    carrier_freq_hz: float = 2e9

    @property
    def wavelength_m(self) -> float:
        return SPEED_OF_LIGHT / self.carrier_freq_hz

    @property
    def element_spacing_m(self) -> float:
        # Half-wavelength uniform array.
        return self.wavelength_m / 2.0

    def exponent(self, link_class: str) -> float:
        return {
            "v2i": self.exponent_v2i,
            "v2v": self.exponent_v2v,
            "sense": self.exponent_sense,
            "ris": self.exponent_ris,
        }[link_class]

    def shadow_sigma_db(self, link_class: str) -> float:
        return {
            "v2i": self.shadow_sigma_v2i_db,
            "v2v": self.shadow_sigma_v2v_db,
            "sense": self.shadow_sigma_sense_db,
            "ris": self.shadow_sigma_ris_db,
        }[link_class]

    def validate(self) -> None:
        for name in ("exponent_v2i", "exponent_v2v", "exponent_sense", "exponent_ris"):
            if getattr(self, name) <= 0:
                raise ConfigError(name, "path-loss exponent must be > 0")
        if self.pathloss_const <= 0:
            raise ConfigError("pathloss_const", "must be > 0")
        if self.carrier_freq_hz <= 0:
            raise ConfigError("carrier_freq_hz", "must be > 0")


@dataclass
class ScenarioConfig:
    """All physical and experiment parameters of one simulated scenario."""

    region_width_m: float = 650.0
    region_height_m: float = 450.0
    n_vehicles: int = 12
    n_targets: int = 2
    n_v2v_links: int | None = None      # defaults to n_vehicles
    bs_position: tuple[float, float, float] = (180.0, 270.0, 25.0)
    ris_position: tuple[float, float, float] = (290.0, 380.0, 25.0)
    speed_range: tuple[float, float] = (10.0, 15.0)
    slot_duration_s: float = 1e-3
    episode_slots: int = 100
    payload_bits: float = 8 * 1060.0
    window_slots: int = 3
    v2i_power_dbm: float = 23.0
    sensing_power_dbm: float = 23.0
    v2v_power_levels_dbm: tuple[float, ...] = tuple(float(p) for p in range(1, 24))
    rate_threshold_bps_hz: float = 3.0
    snr_threshold_db: float = 10.0
    noise_comm_dbm: float = -114.0
    noise_sense_dbm: float = -114.0
    bandwidth_hz: float = 1e6
    ris_elements: int = 12
    phase_levels: int = 8
    ris_amplitude: float = 1.0
    ris_enabled: bool = True
    vehicle_antenna_height_m: float = 1.5
    seed: int = 0
    channel: ChannelParams = field(default_factory=ChannelParams)

    @property
    def n_pairs(self) -> int:
        return self.n_vehicles if self.n_v2v_links is None else self.n_v2v_links

    @property
    def n_power_levels(self) -> int:
        return len(self.v2v_power_levels_dbm)

    def validate(self) -> None:
        if self.n_vehicles < 1:
            raise ConfigError("n_vehicles", "need at least one vehicle")
        if not 0 <= self.n_targets <= self.n_vehicles:
            raise ConfigError("n_targets", "must satisfy 0 <= J <= V")
        if self.n_pairs < 1:
            raise ConfigError("n_v2v_links", "need at least one V2V link")
        if self.n_pairs > self.n_vehicles:
            raise ConfigError("n_v2v_links", "cannot exceed n_vehicles (one channel per pair)")
        if self.region_width_m <= 0 or self.region_height_m <= 0:
            raise ConfigError("region_width_m", "region extents must be positive")
        if not self.v2v_power_levels_dbm:
            raise ConfigError("v2v_power_levels_dbm", "need at least one power level")
        p_min, p_max = min(self.v2v_power_levels_dbm), max(self.v2v_power_levels_dbm)
        for p in self.v2v_power_levels_dbm:
            if not p_min <= p <= p_max:
                raise ConfigError("v2v_power_levels_dbm", "level outside [P_min, P_max]")
        if self.speed_range[0] <= 0 or self.speed_range[0] > self.speed_range[1]:
            raise ConfigError("speed_range", "need 0 < min <= max")
        if self.slot_duration_s <= 0:
            raise ConfigError("slot_duration_s", "must be > 0")
        if self.phase_levels < 2:
            raise ConfigError("phase_levels", "need Q >= 2")
        if self.ris_elements < 1:
            raise ConfigError("ris_elements", "need F >= 1")
        if self.window_slots < 1:
            raise ConfigError("window_slots", "need N >= 1")
        if self.episode_slots < self.window_slots:
            raise ConfigError("episode_slots", "need T >= N")
        if not 0.0 <= self.ris_amplitude <= 1.0:
            raise ConfigError("ris_amplitude", "amplitude must lie in [0, 1]")
        if self.payload_bits <= 0:
            raise ConfigError("payload_bits", "must be > 0")
        if self.bandwidth_hz <= 0:
            raise ConfigError("bandwidth_hz", "must be > 0")
        self.channel.validate()

    def replace(self, **changes) -> "ScenarioConfig":
        cfg = dataclasses.replace(self, **changes)
        cfg.validate()
        return cfg

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        return d


_SCENARIO_FIELDS = {f.name for f in dataclasses.fields(ScenarioConfig)}
_CHANNEL_FIELDS = {f.name for f in dataclasses.fields(ChannelParams)}
_TUPLE_FIELDS = {"bs_position", "ris_position", "speed_range", "v2v_power_levels_dbm"}


def config_from_dict(data: dict) -> ScenarioConfig:
    """Build a validated ScenarioConfig from a plain dict; unknown keys are rejected."""
    if not isinstance(data, dict):
        raise ConfigError("config", "expected an object of scenario fields")
    unknown = set(data) - _SCENARIO_FIELDS
    if unknown:
        raise ConfigError(sorted(unknown)[0], "unknown configuration field")
    kwargs = {}
    for key, value in data.items():
        if key == "channel":
            if not isinstance(value, dict):
                raise ConfigError("channel", "expected an object of channel fields")
            bad = set(value) - _CHANNEL_FIELDS
            if bad:
                raise ConfigError(f"channel.{sorted(bad)[0]}", "unknown configuration field")
            kwargs[key] = ChannelParams(**value)
        elif key in _TUPLE_FIELDS and isinstance(value, list):
            kwargs[key] = tuple(value)
        else:
            kwargs[key] = value
    cfg = ScenarioConfig(**kwargs)
    cfg.validate()
    return cfg


def load_config(path: str) -> ScenarioConfig:
    """Load a scenario config from a JSON file with exact field names."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON in {path}: {exc}") from exc
    return config_from_dict(data)
