"""Experiment configuration: strict INI ingestion and SI conversion.

Config files carry kilometers for readability; everything is converted to
meters (and seconds, Watts, Joules) at ingest. Unknown sections or keys are
rejected, as are missing ones, so a config file always describes the whole
experiment.
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .channel import ChannelParams
from .dynamics import OrbitalLane, vec3
from .energy import PowerParams

KM = 1e3


class ConfigError(Exception):
    """A configuration file failed validation."""


_SCHEMA = {
    "scenario": {
        "src_km", "dst_km", "dt_s", "n_slots", "uav_altitude_km",
        "uav_initial_xy_km", "uav_initial_velocity_mps", "a_max_mps2",
        "accel_levels", "lane_altitude_km", "lane_x_km", "lane_y_span_km",
        "lane_speed_kmps", "lane_phase_km", "sat_spacing_km", "sats_visible",
        "orbit_circumference_km", "extra_lane_x_km",
    },
    "channel": {
        "b_rf_hz", "b_fso_hz", "gamma0", "visibility_km", "wavelength_nm",
        "asnr_db", "asnr_db_convention", "apr_alpha",
    },
    "power": {"c1", "c2", "mass_kg", "v_min_mps"},
    "reward": {"mode", "objective", "d_max_km", "mu_r", "sigma_r", "mu_e",
               "sigma_e", "sigma_d"},
    "marl": {"gamma", "lr_actor", "lr_critic", "rmsprop_decay", "rmsprop_eps",
             "batch_size", "episodes", "entropy_coeff", "hidden_units",
             "seed"},
    "scalarization": {"rate_weight", "energy_weight"},
}

REWARD_MODES = ("best_effort", "fairness")
OBJECTIVES = ("ee_max", "rate_max", "energy_min")


@dataclass(frozen=True)
class ScenarioConfig:
    """Geometry and timing of one experiment, in meters and seconds."""

    src: np.ndarray
    dst: np.ndarray
    dt: float
    n_slots: int
    uav_altitude: float
    uav_initial: tuple[np.ndarray, ...]
    uav_initial_velocity: np.ndarray
    a_max: float
    accel_levels: int
    lanes: tuple[OrbitalLane, ...]
    extra_lane_x: float

    @property
    def n_agents(self) -> int:
        return len(self.uav_initial)

    def make_extra_lane(self) -> OrbitalLane:
        """Midway lane used by the three-lane satellite-only scheme."""
        base = self.lanes[0]
        return OrbitalLane(
            index=len(self.lanes) + 1, altitude=base.altitude,
            speed=base.speed, segment_length=base.segment_length,
            circumference=base.circumference, spacing=base.spacing,
            n_visible=base.n_visible, x_offset=self.extra_lane_x,
            y_start=base.y_start, phase=base.phase)


@dataclass(frozen=True)
class RewardSettings:
    """Reward composition knobs; None means resolved before training."""

    mode: str = "best_effort"
    objective: str = "ee_max"
    d_max: float = 1.5e6
    mu_r: float | None = None
    sigma_r: float | None = None
    mu_e: float | None = None
    sigma_e: float | None = None
    sigma_d: float | None = None


@dataclass(frozen=True)
class TrainSettings:
    gamma: float = 0.99
    lr_actor: float = 1e-4
    lr_critic: float = 1e-4
    rmsprop_decay: float = 0.99
    rmsprop_eps: float = 1e-8
    batch_size: int = 1072
    episodes: int = 50000
    entropy_coeff: float = 0.0
    hidden_units: int = 128
    seed: int = 1


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: ScenarioConfig
    channel: ChannelParams
    power: PowerParams
    reward: RewardSettings
    train: TrainSettings
    rate_weight: float
    energy_weight: float
    config_sha: str = field(default="", compare=False)


def config_sha(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


class _Section:
    """One validated section with typed getters that record consumed keys."""

    def __init__(self, name: str, items: dict[str, str]):
        self.name = name
        self.items = items

    def _raw(self, key: str) -> str:
        if key not in self.items:
            raise ConfigError(f"missing required key [{self.name}] {key}")
        return self.items[key]

    def str(self, key: str, choices: tuple[str, ...] | None = None) -> str:
        v = self._raw(key).strip()
        if choices is not None and v not in choices:
            raise ConfigError(
                f"[{self.name}] {key} must be one of {choices}, got {v!r}")
        return v

    def float(self, key: str) -> float:
        try:
            return float(self._raw(key))
        except ValueError as e:
            raise ConfigError(f"[{self.name}] {key} is not a number") from e

    def int(self, key: str) -> int:
        try:
            return int(self._raw(key))
        except ValueError as e:
            raise ConfigError(f"[{self.name}] {key} is not an integer") from e

    def floats(self, key: str) -> list[float]:
        try:
            return [float(t) for t in self._raw(key).split(",")]
        except ValueError as e:
            raise ConfigError(f"[{self.name}] {key} is not a number list") from e

    def pairs(self, key: str) -> list[tuple[float, float]]:
        out = []
        for chunk in self._raw(key).split("|"):
            vals = chunk.split(",")
            if len(vals) != 2:
                raise ConfigError(f"[{self.name}] {key}: expected x,y pairs "
                                  "separated by '|'")
            try:
                out.append((float(vals[0]), float(vals[1])))
            except ValueError as e:
                raise ConfigError(f"[{self.name}] {key} is not numeric") from e
        return out

    def auto_float(self, key: str) -> float | None:
        v = self._raw(key).strip()
        if v == "auto":
            return None
        try:
            return float(v)
        except ValueError as e:
            raise ConfigError(f"[{self.name}] {key} must be a number or "
                              "'auto'") from e


def _parse_sections(text: str) -> dict[str, _Section]:
    cp = configparser.ConfigParser(interpolation=None)
    try:
        cp.read_string(text)
    except configparser.Error as e:
        raise ConfigError(f"malformed config: {e}") from e
    sections = {}
    for name in cp.sections():
        if name not in _SCHEMA:
            raise ConfigError(f"unknown section [{name}]")
        for key in cp[name]:
            if key not in _SCHEMA[name]:
                raise ConfigError(f"unknown key [{name}] {key}")
        sections[name] = _Section(name, dict(cp[name]))
    for name in _SCHEMA:
        if name not in sections:
            raise ConfigError(f"missing required section [{name}]")
    return sections


def parse_config(text: str) -> ExperimentConfig:
    sec = _parse_sections(text)

    s = sec["scenario"]
    src_km = s.floats("src_km")
    dst_km = s.floats("dst_km")
    if len(src_km) != 3 or len(dst_km) != 3:
        raise ConfigError("[scenario] src_km/dst_km must be x,y,z triples")
    altitude = s.float("uav_altitude_km") * KM
    uav_xy = s.pairs("uav_initial_xy_km")
    v0 = s.floats("uav_initial_velocity_mps")
    if len(v0) != 2:
        raise ConfigError("[scenario] uav_initial_velocity_mps must be vx,vy")
    lane_alt = s.float("lane_altitude_km") * KM
    lane_x = s.floats("lane_x_km")
    lane_speed = s.floats("lane_speed_kmps")
    lane_phase = s.floats("lane_phase_km")
    if not len(lane_x) == len(lane_speed) == len(lane_phase):
        raise ConfigError("[scenario] lane_x_km, lane_speed_kmps and "
                          "lane_phase_km must have equal lengths")
    y_span = s.floats("lane_y_span_km")
    if len(y_span) != 2 or y_span[1] <= y_span[0]:
        raise ConfigError("[scenario] lane_y_span_km must be lo,hi with lo<hi")
    spacing = s.float("sat_spacing_km") * KM
    n_visible = s.int("sats_visible")
    circumference = s.float("orbit_circumference_km") * KM
    try:
        lanes = tuple(
            OrbitalLane(index=k + 1, altitude=lane_alt,
                        speed=lane_speed[k] * KM,
                        segment_length=(y_span[1] - y_span[0]) * KM,
                        circumference=circumference, spacing=spacing,
                        n_visible=n_visible, x_offset=lane_x[k] * KM,
                        y_start=y_span[0] * KM, phase=lane_phase[k] * KM)
            for k in range(len(lane_x)))
    except ValueError as e:
        raise ConfigError(f"[scenario] invalid lane geometry: {e}") from e
    if len(lanes) != 2:
        raise ConfigError("[scenario] exactly two relay lanes are expected")
    scenario = ScenarioConfig(
        src=vec3(*[c * KM for c in src_km]),
        dst=vec3(*[c * KM for c in dst_km]),
        dt=s.float("dt_s"), n_slots=s.int("n_slots"),
        uav_altitude=altitude,
        uav_initial=tuple(vec3(x * KM, y * KM, altitude) for x, y in uav_xy),
        uav_initial_velocity=vec3(v0[0], v0[1], 0.0),
        a_max=s.float("a_max_mps2"), accel_levels=s.int("accel_levels"),
        lanes=lanes, extra_lane_x=s.float("extra_lane_x_km") * KM)
    if scenario.n_slots <= 0 or scenario.dt <= 0:
        raise ConfigError("[scenario] n_slots and dt_s must be positive")
    if scenario.accel_levels < 1:
        raise ConfigError("[scenario] accel_levels must be >= 1")

    c = sec["channel"]
    try:
        channel = ChannelParams(
            b_rf_hz=c.float("b_rf_hz"), b_fso_hz=c.float("b_fso_hz"),
            gamma0=c.float("gamma0"), visibility_km=c.float("visibility_km"),
            wavelength_nm=c.float("wavelength_nm"), asnr_db=c.float("asnr_db"),
            alpha=c.float("apr_alpha"),
            asnr_db_convention=c.str("asnr_db_convention",
                                     ("power", "amplitude")))
    except ValueError as e:
        raise ConfigError(f"[channel] invalid parameters: {e}") from e

    pw = sec["power"]
    try:
        power = PowerParams(c1=pw.float("c1"), c2=pw.float("c2"),
                            mass_kg=pw.float("mass_kg"),
                            v_min=pw.float("v_min_mps"))
    except ValueError as e:
        raise ConfigError(f"[power] invalid parameters: {e}") from e

    r = sec["reward"]
    reward = RewardSettings(
        mode=r.str("mode", REWARD_MODES),
        objective=r.str("objective", OBJECTIVES),
        d_max=r.float("d_max_km") * KM,
        mu_r=r.auto_float("mu_r"), sigma_r=r.auto_float("sigma_r"),
        mu_e=r.auto_float("mu_e"), sigma_e=r.auto_float("sigma_e"),
        sigma_d=r.auto_float("sigma_d"))
    if reward.d_max <= 0:
        raise ConfigError("[reward] d_max_km must be positive")

    m = sec["marl"]
    train = TrainSettings(
        gamma=m.float("gamma"), lr_actor=m.float("lr_actor"),
        lr_critic=m.float("lr_critic"),
        rmsprop_decay=m.float("rmsprop_decay"),
        rmsprop_eps=m.float("rmsprop_eps"), batch_size=m.int("batch_size"),
        episodes=m.int("episodes"), entropy_coeff=m.float("entropy_coeff"),
        hidden_units=m.int("hidden_units"), seed=m.int("seed"))
    if not 0.0 < train.gamma <= 1.0:
        raise ConfigError("[marl] gamma must lie in (0, 1]")
    if train.batch_size < 1 or train.episodes < 1:
        raise ConfigError("[marl] batch_size and episodes must be positive")

    sw = sec["scalarization"]
    return ExperimentConfig(
        scenario=scenario, channel=channel, power=power, reward=reward,
        train=train, rate_weight=sw.float("rate_weight"),
        energy_weight=sw.float("energy_weight"), config_sha=config_sha(text))


def load_config(path: str | Path) -> ExperimentConfig:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    return parse_config(p.read_text(encoding="utf-8"))
