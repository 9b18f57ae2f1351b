"""Propulsion power and per-slot energy of a fixed-wing UAV.

The power model is cubic in speed plus an induced term inversely
proportional to speed, scaled by a centripetal factor when acceleration has
a component orthogonal to the velocity. Fixed-wing aircraft cannot hover,
so speeds are clamped to ``v_min`` before entering the formula. The kinetic
energy difference term telescopes over a trajectory and is therefore
applied once per episode, not per slot.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

GRAVITY = 9.8  # m/s^2


@dataclass(frozen=True)
class PowerParams:
    """Fixed-wing propulsion constants (units making c1*v^3 and c2/v Watts)."""

    c1: float = 9.26e-4
    c2: float = 2250.0
    mass_kg: float = 10.0
    v_min: float = 3.0
    g: float = GRAVITY

    def __post_init__(self) -> None:
        if self.c1 <= 0 or self.c2 <= 0 or self.mass_kg <= 0:
            raise ValueError("c1, c2 and mass must be positive")
        if self.v_min <= 0:
            raise ValueError("v_min must be positive")

    def min_steady_power(self) -> float:
        """Minimum of the level steady-flight power over speed."""
        v_star = max((self.c2 / (3.0 * self.c1)) ** 0.25, self.v_min)
        return self.c1 * v_star ** 3 + self.c2 / v_star


def uav_power(v: np.ndarray, a: np.ndarray, p: PowerParams) -> float:
    """Instantaneous propulsion power in Watts for velocity v and accel a.

    Depends only on |v|, |a| and the angle between them. The parallel
    component of acceleration does not cost centripetal power.
    """
    speed = float(np.linalg.norm(v))
    a_sq = float(np.dot(a, a))
    if speed > 0.0:
        proj_sq = float(np.dot(a, v)) ** 2 / (speed * speed)
    else:
        proj_sq = 0.0  # direction undefined at rest; all of a counts
    s = max(speed, p.v_min)
    centripetal = 1.0 + (a_sq - proj_sq) / (p.g * p.g)
    return p.c1 * s ** 3 + (p.c2 / s) * centripetal


def slot_energy(power_w: float, dt: float) -> float:
    """Energy in Joules spent over one slot at constant power."""
    if power_w < 0:
        raise ValueError("power must be nonnegative")
    return power_w * dt


def episode_kinetic_correction(v_start: np.ndarray, v_end: np.ndarray,
                               mass_kg: float) -> float:
    """Kinetic energy change (m/2)(|v_end|^2 - |v_start|^2), once per episode."""
    return 0.5 * mass_kg * (float(np.dot(v_end, v_end))
                            - float(np.dot(v_start, v_start)))


def steady_power(speed: float, p: PowerParams) -> float:
    """Level unaccelerated flight power at a given speed (clamped)."""
    s = max(speed, p.v_min)
    return p.c1 * s ** 3 + p.c2 / s
