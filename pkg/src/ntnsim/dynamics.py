"""Discrete-time kinematics for UAV relays and orbital satellite lanes.

Internal units are meters and seconds throughout. Orbital lanes are the
line-segment approximation: satellites move along a fixed x-offset line
parallel to the y axis at constant signed speed, and their along-track
coordinate wraps modulo the segment length so that a constant number of
renumbered satellites stays visible.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


def vec3(x: float, y: float, z: float) -> np.ndarray:
    """Build a finite 3-vector in meters."""
    v = np.array([float(x), float(y), float(z)], dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError(f"non-finite vector components: {v}")
    return v


@dataclass(frozen=True)
class UavState:
    """Position/velocity snapshot of one UAV relay (m, m/s).

    Flight is horizontal: altitude and the vertical velocity component are
    invariant under stepping.
    """

    position: np.ndarray
    velocity: np.ndarray
    agent_id: int = 0


def step_uav(state: UavState, accel: np.ndarray, dt: float,
             a_max: float = 5.0) -> UavState:
    """Advance one UAV by one slot of constant acceleration.

    The acceleration must be horizontal and within the per-axis limit
    ``a_max`` (the action grid discretizes each axis independently, so the
    limit applies per component).
    """
    ax, ay, az = float(accel[0]), float(accel[1]), float(accel[2])
    if az != 0.0:
        raise ValueError("UAV acceleration must stay in the horizontal plane")
    if max(abs(ax), abs(ay)) > a_max * (1.0 + 1e-12):
        raise ValueError(
            f"acceleration ({ax}, {ay}) exceeds the per-axis limit {a_max} m/s^2")
    a = np.array([ax, ay, 0.0])
    new_q = state.position + state.velocity * dt + 0.5 * a * dt * dt
    new_v = state.velocity + a * dt
    return UavState(position=new_q, velocity=new_v, agent_id=state.agent_id)


@dataclass(frozen=True)
class OrbitalLane:
    """Line-segment model of one orbital lane.

    ``speed`` is signed: positive means the along-track coordinate (and the
    y position) increases with time. ``n_visible`` satellites are tracked;
    each wraps modulo ``segment_length`` so the visible set has constant
    size. The configured ``n_visible`` may be smaller than the geometric
    maximum ceil(segment_length / spacing) but never larger.
    """

    index: int
    altitude: float         # m
    speed: float            # m/s, signed
    segment_length: float   # m, visible segment c_C
    circumference: float    # m, full orbit c_E
    spacing: float          # m, inter-satellite distance
    n_visible: int          # satellites tracked on the segment
    x_offset: float         # m
    y_start: float          # m, low-y end of the segment
    phase: float = 0.0      # m, along-track offset of satellite 1 at slot 0

    def __post_init__(self) -> None:
        if self.spacing <= 0:
            raise ValueError("satellite spacing must be positive")
        if self.segment_length <= 0 or self.circumference <= 0:
            raise ValueError("lane lengths must be positive")
        if self.segment_length > self.circumference * (1 + 1e-9):
            raise ValueError("segment length cannot exceed the circumference")
        max_visible = math.ceil(self.segment_length / self.spacing)
        if not 1 <= self.n_visible <= max_visible:
            raise ValueError(
                f"n_visible={self.n_visible} outside [1, {max_visible}] for "
                f"segment {self.segment_length} m at spacing {self.spacing} m")


@dataclass(frozen=True)
class SatSnapshot:
    """One satellite's renumbered identity and position at a slot."""

    lane_index: int
    local_index: int   # 1..n_visible
    position: np.ndarray = field(repr=False)


def propagate_sat(lane: OrbitalLane, local_index: int, slot: int,
                  dt: float) -> SatSnapshot:
    """Position of the ``local_index``-th tracked satellite at ``slot``.

    Along-track coordinate is (phase + (i-1)*spacing + speed*dt*slot) modulo
    the segment length, mapped onto the lane's y interval. Deterministic in
    (lane, local_index, slot).
    """
    if slot < 0:
        raise ValueError("slot must be nonnegative")
    if not 1 <= local_index <= lane.n_visible:
        raise ValueError(
            f"satellite index {local_index} outside 1..{lane.n_visible}")
    s0 = lane.phase + (local_index - 1) * lane.spacing
    s = (s0 + lane.speed * dt * slot) % lane.segment_length
    pos = vec3(lane.x_offset, lane.y_start + s, lane.altitude)
    return SatSnapshot(lane.index, local_index, pos)


def visible_sats(lane: OrbitalLane, slot: int, dt: float) -> list[SatSnapshot]:
    """All tracked satellites at ``slot``, renumbered 1.. by ascending y."""
    snaps = [propagate_sat(lane, i, slot, dt)
             for i in range(1, lane.n_visible + 1)]
    snaps.sort(key=lambda s: s.position[1])
    return [SatSnapshot(lane.index, rank, s.position)
            for rank, s in enumerate(snaps, start=1)]


def sat_positions(lane: OrbitalLane, slot: int, dt: float) -> np.ndarray:
    """(n_visible, 3) array of renumbered satellite positions at ``slot``."""
    return np.array([s.position for s in visible_sats(lane, slot, dt)])
