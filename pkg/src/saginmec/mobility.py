"""Ground-device and UAV movement.

UDs follow a per-axis Gauss-Markov recursion and reflect off the area
boundary.  UAVs fly a commanded (heading, speed) for one slot and are
clamped to the area, with the clamp reported so the trainer can charge a
boundary penalty.  The safety check is pairwise horizontal distance; UAVs
share one altitude.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def wrap_heading(theta: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    return math.pi - (math.pi - theta) % (2.0 * math.pi)


@dataclass(frozen=True)
class UavControl:
    """One slot's flight command; heading wrapped, speed clamped at build."""

    heading_rad: float
    speed_mps: float

    @classmethod
    def make(cls, heading_rad: float, speed_mps: float,
             v_max: float) -> "UavControl":
        return cls(wrap_heading(heading_rad),
                   float(np.clip(speed_mps, 0.0, v_max)))


def _reflect(x: np.ndarray, hi: float):
    """Fold positions into [0, hi]; returns folded x and a sign flip for the
    velocity component (odd number of wall hits -> -1)."""
    period = 2.0 * hi
    y = np.mod(x, period)
    folded = np.minimum(y, period - y)
    # Velocity flips when the fold lands on the descending half of the
    # triangle wave.
    flip = np.where(y > hi, -1.0, 1.0)
    return folded, flip


def step_ud(pos: np.ndarray, vel: np.ndarray, mean_vel: np.ndarray,
            alpha: float, noise_std: float, slot_len: float,
            area: tuple, rng: np.random.Generator):
    """One Gauss-Markov step for all UDs.

    vel' = alpha*vel + (1-alpha)*mean + sqrt(1-alpha^2)*noise per axis;
    pos' = pos + vel'*slot, reflected into the area with the velocity
    component flipped on reflection.  alpha=1 with zero noise is straight-
    line motion.
    """
    noise = rng.normal(size=vel.shape) * noise_std
    new_vel = alpha * vel + (1.0 - alpha) * mean_vel \
        + math.sqrt(max(0.0, 1.0 - alpha * alpha)) * noise
    raw = pos + new_vel * slot_len
    out_pos = np.empty_like(raw)
    out_vel = new_vel.copy()
    for axis, hi in enumerate(area):
        folded, flip = _reflect(raw[:, axis], hi)
        out_pos[:, axis] = folded
        out_vel[:, axis] *= flip
    return out_pos, out_vel


def step_uav(pos: np.ndarray, control: UavControl, slot_len: float,
             area: tuple):
    """Advance one UAV by its command; clamp to the area.

    Returns (new_pos, clamped) where clamped reports a boundary hit.
    """
    delta = control.speed_mps * slot_len
    raw = pos + delta * np.array([math.cos(control.heading_rad),
                                  math.sin(control.heading_rad)])
    clamped_pos = np.clip(raw, [0.0, 0.0], list(area))
    hit = bool(np.any(clamped_pos != raw))
    return clamped_pos, hit


def check_safety(uav_pos: np.ndarray, d_safe: float):
    """All unordered UAV pairs closer than d_safe (strict), as (a, b) a<b."""
    n = len(uav_pos)
    if n < 2:
        return []
    diff = uav_pos[:, None, :] - uav_pos[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=-1))
    a_idx, b_idx = np.nonzero(dist < d_safe)
    return [(int(a), int(b)) for a, b in zip(a_idx, b_idx) if a < b]
