"""Delay and energy models for one slot.

A task of `bits` with density `cycles_per_bit` is split by the offload
ratio: the local share runs on the UD CPU (DVFS energy, capacitance *
f^2 per cycle), the offloaded share is either computed on the serving
UAV or relayed over a satellite to the ground-station cloud, whose compute
time is taken as negligible.  Local and offloaded shares run in parallel,
so a UD's completion time is the max of the two.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import C_LIGHT
from .constellation import CloudPath

# Clamps of a negative instantaneous propulsion power; only reachable for
# delta choices far from the defaults, but worth surfacing when it happens.
_prop_clamp_count = 0


def propulsion_clamp_count() -> int:
    return _prop_clamp_count


def reset_propulsion_clamp_count() -> None:
    global _prop_clamp_count
    _prop_clamp_count = 0


def local_outcome(bits: float, cycles_per_bit: float, ratio: float,
                  f_loc: float, capacitance: float):
    """(delay s, energy J) of the on-device share.

    delay = density*(1-ratio)*bits / f_loc
    energy = capacitance * density * f_loc^2 * (1-ratio) * bits
    """
    cycles = cycles_per_bit * (1.0 - ratio) * bits
    delay = cycles / f_loc
    energy = capacitance * f_loc * f_loc * cycles
    return delay, energy


def edge_outcome(bits: float, cycles_per_bit: float, ratio: float,
                 rate_bps: float, f_alloc: float, tx_power_w: float,
                 energy_per_cycle_j: float):
    """(delay s, UD energy J, UAV energy J) of a share offloaded to a UAV.

    Upload then compute on the allocated slice; the UD pays transmit
    energy, the UAV pays a fixed energy per cycle.  A positive share with
    no allocated compute cannot finish, which is a caller contract bug.
    """
    off_bits = ratio * bits
    if off_bits == 0.0:
        return 0.0, 0.0, 0.0
    if f_alloc <= 0.0:
        raise ValueError("offloaded share with zero allocated compute")
    cycles = cycles_per_bit * off_bits
    delay = off_bits / rate_bps + cycles / f_alloc
    return delay, tx_power_w * off_bits / rate_bps, cycles * energy_per_cycle_j


def propulsion_power(speed_mps: float, deltas, tip_speed_mps: float) -> float:
    """Rotary-wing power draw at a level flight speed, W.

    blade profile: d1*(1 + 3 v^2/v_tip^2)
    induced:       d2*(d3 + v^4/4)^(1/4) - v^2/2
    parasite:      d4*v^3

    The bracket can dip below zero for small parasite constants at high
    speed; power is clamped at zero and the clamp counted.
    """
    global _prop_clamp_count
    d1, d2, d3, d4 = deltas
    v = speed_mps
    power = (d1 * (1.0 + 3.0 * v * v / (tip_speed_mps * tip_speed_mps))
             + d4 * v ** 3
             + d2 * (d3 + v ** 4 / 4.0) ** 0.25 - v * v / 2.0)
    if power < 0.0:
        _prop_clamp_count += 1
        return 0.0
    return power


def propulsion_energy(speed_mps: float, deltas, tip_speed_mps: float,
                      slot_len_s: float) -> float:
    """Energy of holding `speed_mps` for one slot; linear in slot length."""
    return propulsion_power(speed_mps, deltas, tip_speed_mps) * slot_len_s


def cloud_outcome(bits: float, ratio: float, rate_up_bps: float,
                  tx_power_w: float, ud_sat_dist_m: float, path: CloudPath,
                  isl_rate_bps: float, sat_ground_rate_bps: float):
    """(delay s, UD energy J) of a share relayed through a satellite.

    delay = upload + hops * ISL forwarding + downlink to the ground
    station + 2x the end-to-end propagation path (round trip, so the
    result's return leg is included).  The UD pays only upload energy.
    """
    off_bits = ratio * bits
    if off_bits == 0.0:
        return 0.0, 0.0
    transfer = (off_bits / rate_up_bps
                + path.hops * off_bits / isl_rate_bps
                + off_bits / sat_ground_rate_bps)
    propagation = 2.0 * (ud_sat_dist_m + path.isl_dist_m
                         + path.sat_gs_dist_m) / C_LIGHT
    return transfer + propagation, tx_power_w * off_bits / rate_up_bps


def combine_cost(t_local, e_local, t_offload, e_offload,
                 w_delay: float, w_energy: float):
    """Per-UD totals and the slot's system cost.

    T_i = max(local, offloaded) since the shares run in parallel;
    E_i = local + transmit; cost = w_delay*sum(T) + w_energy*sum(E).
    """
    t_total = np.maximum(np.asarray(t_local), np.asarray(t_offload))
    e_total = np.asarray(e_local) + np.asarray(e_offload)
    cost = w_delay * float(np.sum(t_total)) + w_energy * float(np.sum(e_total))
    return t_total, e_total, cost


@dataclass
class StepOutcome:
    """Everything one slot produced, for rewards, metrics and traces."""

    slot: int
    cost: float
    # per UD
    t_local: np.ndarray
    t_offload: np.ndarray
    t_total: np.ndarray
    e_local: np.ndarray
    e_offload: np.ndarray
    e_total: np.ndarray
    deadline_violated: np.ndarray   # bool (I,)
    assignment: np.ndarray          # server index per UD, UAVs then sats
    f_alloc: np.ndarray             # (I,) Hz granted on the serving UAV
    offload_ratio: np.ndarray       # (I,) executed ratios
    # per UAV
    uav_e_compute: np.ndarray
    uav_e_propulsion: np.ndarray
    uav_e_total: np.ndarray
    uav_boundary: np.ndarray        # bool (U,) clamped at the fence
    uav_collision: np.ndarray       # bool (U,) in some too-close pair
    extras: dict = field(default_factory=dict)
