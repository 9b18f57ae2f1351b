"""Cooperative multi-agent environment for the relay network.

Each agent is one UAV. Per slot it picks one satellite per lane and a
discretized horizontal acceleration; the environment advances kinematics
and orbits, evaluates the association-aware path rates and propulsion
energy, and hands every agent the same scalar reward. Observations are
normalized to O(1) and carry the slot fingerprint n/N.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import ExperimentConfig, RewardSettings, ScenarioConfig
from .dynamics import UavState, sat_positions, step_uav
from .energy import PowerParams, slot_energy, uav_power, episode_kinetic_correction
from .network import path_rates, system_step_metrics

POSITION_SCALE = 6e6   # m, segment length
VELOCITY_SCALE = 100.0  # m/s
N_HOPS = 4


@dataclass(frozen=True)
class RewardWeights:
    """Normalizers of the shared reward and the distance penalty threshold."""

    mu_r: float
    sigma_r: float
    mu_e: float
    sigma_e: float
    mu_d: float
    sigma_d: float
    d_max: float
    mode: str = "best_effort"

    def __post_init__(self) -> None:
        if min(self.sigma_r, self.sigma_e, self.sigma_d) <= 0:
            raise ValueError("reward normalization scales must be positive")
        if self.d_max <= 0:
            raise ValueError("d_max must be positive")
        if self.mode not in ("best_effort", "fairness"):
            raise ValueError(f"unknown reward mode {self.mode!r}")


def _relu_penalty(pair_distances, w: RewardWeights) -> float:
    total = float(sum(pair_distances))
    return max(0.0, (total - w.mu_d) / w.sigma_d)


def reward_best_effort(sum_rate: float, sum_energy: float, pair_distances,
                       w: RewardWeights, include_rate: bool = True,
                       include_energy: bool = True) -> float:
    """Linear-normalized throughput minus energy minus the distance penalty."""
    r = 0.0
    if include_rate:
        r += (sum_rate - w.mu_r) / w.sigma_r
    if include_energy:
        r -= (sum_energy - w.mu_e) / w.sigma_e
    return r - _relu_penalty(pair_distances, w)


def reward_fairness(sum_rate: float, sum_energy: float, pair_distances,
                    w: RewardWeights, include_rate: bool = True,
                    include_energy: bool = True,
                    allow_many_agents: bool = False) -> float:
    """Sigmoid-saturated throughput term; defined for two agents."""
    if len(pair_distances) != 1 and not allow_many_agents:
        raise ValueError("the fairness reward is defined for exactly 2 agents")
    r = 0.0
    if include_rate:
        g = (sum_rate - w.mu_r) / w.sigma_r
        r += 1.0 / (1.0 + math.exp(-g))
    if include_energy:
        r -= (sum_energy - w.mu_e) / w.sigma_e
    return r - _relu_penalty(pair_distances, w)


def resolve_reward_weights(cfg: ExperimentConfig) -> RewardWeights:
    """Fill the 'auto' normalizers from the scenario.

    The throughput mean comes from a pre-pass running the exhaustive
    fixed-ground-relay search over the whole horizon; its largest deviation
    becomes the throughput scale. The energy mean is the per-slot minimum
    steady-flight energy summed over agents.
    """
    r: RewardSettings = cfg.reward
    mu_e = r.mu_e
    if mu_e is None:
        mu_e = cfg.scenario.n_agents * cfg.scenario.dt * cfg.power.min_steady_power()
    sigma_e = r.sigma_e if r.sigma_e is not None else mu_e
    sigma_d = r.sigma_d if r.sigma_d is not None else r.d_max
    mu_r, sigma_r = r.mu_r, r.sigma_r
    if mu_r is None or sigma_r is None:
        from .baselines import run_sat_ground
        series = run_sat_ground(cfg.scenario, cfg.channel, "cooperative").sum_bps
        mean = float(np.mean(series))
        if mu_r is None:
            mu_r = mean
        if sigma_r is None:
            dev = float(np.max(np.abs(series - mean)))
            sigma_r = dev if dev > 0 else max(mean, 1.0)
    return RewardWeights(mu_r=mu_r, sigma_r=sigma_r, mu_e=mu_e,
                         sigma_e=sigma_e, mu_d=r.d_max, sigma_d=sigma_d,
                         d_max=r.d_max, mode=r.mode)


class EpisodeOver(RuntimeError):
    """step() was called after the final slot."""


class RelayNetworkEnv:
    """Discrete-time cooperative environment over one satellite pass."""

    def __init__(self, scenario: ScenarioConfig, channel, power: PowerParams,
                 weights: RewardWeights, objective: str = "ee_max",
                 rate_weight: float = 1e9, energy_weight: float = 3e4):
        if objective not in ("ee_max", "rate_max", "energy_min"):
            raise ValueError(f"unknown objective {objective!r}")
        if weights.mode == "fairness" and scenario.n_agents != 2:
            raise ValueError("fairness mode needs exactly 2 agents")
        self.sc = scenario
        self.channel = channel
        self.power = power
        self.weights = weights
        self.objective = objective
        self.rate_weight = rate_weight
        self.energy_weight = energy_weight
        self.n_agents = scenario.n_agents
        self.i_visible = scenario.lanes[0].n_visible
        n_accel = 2 * scenario.accel_levels + 1
        self.head_sizes = (self.i_visible, self.i_visible, n_accel, n_accel)
        self.obs_dim = 6 * self.i_visible + 3 + 3 + N_HOPS + 1 + 1
        self.slot = 0
        self._uavs: list[UavState] = []

    # -- episode control ---------------------------------------------------

    def reset(self) -> list[np.ndarray]:
        sc = self.sc
        self.slot = 0
        self._uavs = [UavState(pos.copy(), sc.uav_initial_velocity.copy(), j)
                      for j, pos in enumerate(sc.uav_initial)]
        self._assoc = np.ones((self.n_agents, 2), dtype=int)
        rest_power = uav_power(sc.uav_initial_velocity, np.zeros(3), self.power)
        self._prev_energy = [slot_energy(rest_power, sc.dt)] * self.n_agents
        self.total_bits = 0.0
        self.total_energy = 0.0
        self._refresh_sats()
        return [self._observe(j) for j in range(self.n_agents)]

    def _refresh_sats(self) -> None:
        self._lane1 = sat_positions(self.sc.lanes[0], self.slot, self.sc.dt)
        self._lane2 = sat_positions(self.sc.lanes[1], self.slot, self.sc.dt)

    # -- observations and actions -------------------------------------------

    def _observe(self, j: int) -> np.ndarray:
        uav = self._uavs[j]
        from .network import link_distances
        i1, i2 = self._assoc[j]
        dists = link_distances(self.sc.src, self.sc.dst,
                               self._lane1[i1 - 1], self._lane2[i2 - 1],
                               uav.position)
        parts = [
            self._lane1.ravel() / POSITION_SCALE,
            self._lane2.ravel() / POSITION_SCALE,
            uav.position / POSITION_SCALE,
            uav.velocity / VELOCITY_SCALE,
            np.array(dists) / POSITION_SCALE,
            [self._prev_energy[j] / self.weights.mu_e],
            [self.slot / self.sc.n_slots],
        ]
        return np.concatenate(parts)

    def decode_action(self, raw) -> tuple[np.ndarray, np.ndarray]:
        """Map head indices to (per-lane satellite picks, acceleration m/s^2)."""
        idx = np.asarray(raw, dtype=int)
        if idx.shape != (4,):
            raise ValueError("an action is (lane1, lane2, accel_x, accel_y)")
        d = self.sc.accel_levels
        if not (0 <= idx[0] < self.i_visible and 0 <= idx[1] < self.i_visible):
            raise ValueError(f"association index out of range: {idx[:2]}")
        if not (0 <= idx[2] <= 2 * d and 0 <= idx[3] <= 2 * d):
            raise ValueError(f"acceleration index out of range: {idx[2:]}")
        step = self.sc.a_max / d
        accel = np.array([(idx[2] - d) * step, (idx[3] - d) * step, 0.0])
        return idx[:2] + 1, accel

    # -- stepping ------------------------------------------------------------

    def step(self, actions) -> tuple[list[np.ndarray], float, bool, dict]:
        if self.slot >= self.sc.n_slots:
            raise EpisodeOver("episode finished; call reset()")
        acts = np.asarray(actions, dtype=int)
        if acts.shape != (self.n_agents, 4):
            raise ValueError(f"joint action shape {acts.shape} != "
                             f"({self.n_agents}, 4)")
        assoc = np.empty((self.n_agents, 2), dtype=int)
        accels = []
        for j in range(self.n_agents):
            assoc[j], a = self.decode_action(acts[j])
            accels.append(a)

        relay_pos = np.array([u.position for u in self._uavs])
        paths = path_rates(assoc, self._lane1, self._lane2, relay_pos,
                           self.sc.src, self.sc.dst, self.channel)
        powers = [uav_power(self._uavs[j].velocity, accels[j], self.power)
                  for j in range(self.n_agents)]
        energies = [slot_energy(p, self.sc.dt) for p in powers]
        pair_d = [float(np.linalg.norm(self._uavs[i].position
                                       - self._uavs[j].position))
                  for i in range(self.n_agents)
                  for j in range(i + 1, self.n_agents)]

        e2e = [p.e2e for p in paths]
        metrics = system_step_metrics(e2e, energies, self.rate_weight,
                                      self.energy_weight)
        reward = self._reward(metrics.sum_throughput_bps,
                              metrics.sum_energy_j, pair_d)

        self.total_bits += metrics.sum_throughput_bps * self.sc.dt
        self.total_energy += metrics.sum_energy_j

        self._uavs = [step_uav(self._uavs[j], accels[j], self.sc.dt,
                               self.sc.a_max)
                      for j in range(self.n_agents)]
        self._assoc = assoc
        self._prev_energy = energies
        self.slot += 1
        self._refresh_sats()
        done = self.slot == self.sc.n_slots

        info = {
            "slot": self.slot - 1,
            "metrics": metrics,
            "paths": paths,
            "powers_w": powers,
            "energies_j": energies,
            "pair_distances_m": pair_d,
            "assoc": assoc.copy(),
        }
        if done:
            corr = sum(
                episode_kinetic_correction(self.sc.uav_initial_velocity,
                                           u.velocity, self.power.mass_kg)
                for u in self._uavs)
            self.total_energy += corr
            info["kinetic_correction_j"] = corr
        obs = [self._observe(j) for j in range(self.n_agents)]
        return obs, reward, done, info

    def _reward(self, sum_rate: float, sum_energy: float, pair_d) -> float:
        include_rate = self.objective in ("ee_max", "rate_max")
        include_energy = self.objective in ("ee_max", "energy_min")
        if self.weights.mode == "fairness":
            return reward_fairness(sum_rate, sum_energy, pair_d, self.weights,
                                   include_rate, include_energy)
        return reward_best_effort(sum_rate, sum_energy, pair_d, self.weights,
                                  include_rate, include_energy)

    # -- episode aggregates ---------------------------------------------------

    @property
    def uav_positions(self) -> np.ndarray:
        return np.array([u.position for u in self._uavs])

    @property
    def uav_velocities(self) -> np.ndarray:
        return np.array([u.velocity for u in self._uavs])

    def energy_efficiency(self) -> float:
        """Delivered bits over spent Joules so far (kinetic-corrected at end)."""
        if self.total_energy <= 0:
            return 0.0
        return self.total_bits / self.total_energy
