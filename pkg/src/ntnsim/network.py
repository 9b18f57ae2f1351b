"""Multi-hop path throughput with association-aware bandwidth sharing.

Each relay path is Src -> sat(lane 1) -> relay -> sat(lane 2) -> Dst. An
association assigns one satellite per lane to each relay; when several
relays pick the same satellite, every hop touching that satellite has its
capacity split equally among them. Decode-and-forward relaying without
buffering collapses the per-hop rate chain to the minimum hop capacity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HOP_NAMES = ("src_sat1", "sat1_relay", "relay_sat2", "sat2_dst")


def link_distances(src: np.ndarray, dst: np.ndarray, sat1: np.ndarray,
                   sat2: np.ndarray, relay: np.ndarray) -> tuple[float, float, float, float]:
    """Euclidean lengths of the four hops of one relay path, in meters."""
    d1 = float(np.linalg.norm(sat1 - src))
    d2 = float(np.linalg.norm(relay - sat1))
    d3 = float(np.linalg.norm(sat2 - relay))
    d4 = float(np.linalg.norm(dst - sat2))
    return d1, d2, d3, d4


def validate_association(assoc: np.ndarray, n_agents: int, n_visible: int) -> np.ndarray:
    """Check an (n_agents, 2) array of per-lane satellite picks in 1..n_visible."""
    a = np.asarray(assoc, dtype=int)
    if a.shape != (n_agents, 2):
        raise ValueError(f"association shape {a.shape} != ({n_agents}, 2)")
    if np.any(a < 1) or np.any(a > n_visible):
        raise ValueError(f"satellite indices must lie in 1..{n_visible}")
    return a


@dataclass(frozen=True)
class PathRates:
    """Per-agent hop capacities, causality-chained rates and E2E throughput."""

    capacities: tuple[float, float, float, float]
    rates: tuple[float, float, float, float]
    e2e: float
    links: tuple[str, str, str, str]
    distances: tuple[float, float, float, float]


def df_chain(capacities: tuple[float, float, float, float]) -> tuple[tuple[float, ...], float]:
    """Maximal feasible hop rates under information causality, and their min."""
    rates = []
    upstream = float("inf")
    for c in capacities:
        upstream = min(c, upstream)
        rates.append(upstream)
    return tuple(rates), rates[-1]


def path_rates(assoc: np.ndarray, lane1_pos: np.ndarray, lane2_pos: np.ndarray,
               relay_pos: np.ndarray, src: np.ndarray, dst: np.ndarray,
               channel) -> list[PathRates]:
    """Association-aware rates for every relay path at one slot.

    ``lane1_pos``/``lane2_pos`` are (n_visible, 3) renumbered satellite
    positions, ``relay_pos`` is (n_agents, 3). ``channel`` provides
    ``hybrid_rate(d) -> (bps, link)`` semantics via ntnsim.channel.
    """
    from .channel import hybrid_rate

    n_agents = relay_pos.shape[0]
    assoc = validate_association(assoc, n_agents, lane1_pos.shape[0])
    share1 = np.bincount(assoc[:, 0], minlength=lane1_pos.shape[0] + 1)
    share2 = np.bincount(assoc[:, 1], minlength=lane2_pos.shape[0] + 1)

    out = []
    for j in range(n_agents):
        i1, i2 = assoc[j, 0], assoc[j, 1]
        sat1, sat2 = lane1_pos[i1 - 1], lane2_pos[i2 - 1]
        dists = link_distances(src, dst, sat1, sat2, relay_pos[j])
        caps, links = [], []
        for hop, d in enumerate(dists):
            rate, link = hybrid_rate(d, channel)
            rate /= share1[i1] if hop < 2 else share2[i2]
            caps.append(rate)
            links.append(link)
        rates, e2e = df_chain(tuple(caps))
        out.append(PathRates(tuple(caps), rates, e2e, tuple(links), dists))
    return out


@dataclass(frozen=True)
class SystemMetrics:
    """One slot's aggregate throughput, energy and scalarized objective."""

    sum_throughput_bps: float
    sum_energy_j: float
    scalarized: float


def system_step_metrics(e2e_bps: list[float], energies_j: list[float],
                        rate_weight: float = 1e9,
                        energy_weight: float = 3e4) -> SystemMetrics:
    """Aggregate one slot; scalarized = rate_weight*sum(R) - energy_weight*sum(E)."""
    if len(e2e_bps) != len(energies_j):
        raise ValueError("throughput and energy lists must agree in length")
    sum_r = float(sum(e2e_bps))
    sum_e = float(sum(energies_j))
    return SystemMetrics(sum_r, sum_e, rate_weight * sum_r - energy_weight * sum_e)
