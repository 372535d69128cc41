"""World state: positions, energies, per-slot tasks.

`init_world(cfg, seed)` is a pure function of its arguments; calling it
twice gives bit-identical states.  Satellites are treated as quasi-static
relay points over the episode, so only their configured (or synthetic)
horizontal positions are stored.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import ScenarioConfig, dbm_to_watts, validate_config
from .rng import substream


@dataclass
class WorldState:
    slot: int
    ud_pos: np.ndarray        # (I, 2) m
    ud_vel: np.ndarray        # (I, 2) m/s
    ud_mean_vel: np.ndarray   # (I, 2) m/s, Gauss-Markov attractor per UD
    ud_tx_power_w: np.ndarray  # (I,) W, drawn once per episode
    uav_pos: np.ndarray       # (U, 2) m
    sat_pos: np.ndarray       # (N, 2) m horizontal; altitude lives in cfg
    ud_energy_j: np.ndarray   # (I,) remaining budget
    uav_energy_j: np.ndarray  # (U,) remaining budget
    task_bits: np.ndarray     # (I,)
    task_cycles_per_bit: np.ndarray  # (I,)
    task_deadline_s: np.ndarray      # (I,)

    def copy(self) -> "WorldState":
        return WorldState(
            slot=self.slot,
            ud_pos=self.ud_pos.copy(),
            ud_vel=self.ud_vel.copy(),
            ud_mean_vel=self.ud_mean_vel.copy(),
            ud_tx_power_w=self.ud_tx_power_w.copy(),
            uav_pos=self.uav_pos.copy(),
            sat_pos=self.sat_pos.copy(),
            ud_energy_j=self.ud_energy_j.copy(),
            uav_energy_j=self.uav_energy_j.copy(),
            task_bits=self.task_bits.copy(),
            task_cycles_per_bit=self.task_cycles_per_bit.copy(),
            task_deadline_s=self.task_deadline_s.copy(),
        )


def sample_tasks(cfg: ScenarioConfig, size_rng, density_rng, deadline_rng,
                 n: int):
    """Draw n tasks: (bits, cycles/bit, deadline s).

    Each field comes from its own substream so changing one range never
    shifts the draws of another.  Density is configured in cycles/byte.
    """
    tk = cfg.tasks
    bits = size_rng.uniform(tk.size_range_bits[0], tk.size_range_bits[1], n)
    cpb = density_rng.uniform(tk.density_range_cpB[0],
                              tk.density_range_cpB[1], n) / 8.0
    deadline = deadline_rng.uniform(tk.deadline_range_s[0],
                                    tk.deadline_range_s[1], n)
    return bits, cpb, deadline


def default_sat_layout(cfg: ScenarioConfig) -> np.ndarray:
    """Synthetic constellation: first sat over the area centre, the rest on
    a ring of radius sat_alt/2 (neighbour spacing of LEO order)."""
    sc = cfg.scenario
    centre = np.array([sc.area_x_max_m / 2.0, sc.area_y_max_m / 2.0])
    pos = np.zeros((sc.num_sats, 2))
    if sc.num_sats >= 1:
        pos[0] = centre
    radius = sc.sat_alt_m / 2.0
    for k in range(1, sc.num_sats):
        ang = 2.0 * math.pi * k / sc.num_sats
        pos[k] = centre + radius * np.array([math.cos(ang), math.sin(ang)])
    return pos


def init_world(cfg: ScenarioConfig, seed: int) -> WorldState:
    """Place everyone, fill energy budgets, draw slot-0 tasks."""
    report = validate_config(cfg)
    if not report.ok:
        raise ValueError("invalid config:\n" + report.summary())
    sc = cfg.scenario
    I, U, N = sc.num_uds, sc.num_uavs, sc.num_sats

    ud_rng = substream(seed, "ud-pos")
    ud_pos = np.column_stack([
        ud_rng.uniform(0.0, sc.area_x_max_m, I),
        ud_rng.uniform(0.0, sc.area_y_max_m, I),
    ])

    uav_rng = substream(seed, "uav-pos")
    uav_pos = np.zeros((U, 2))
    for u in range(U):
        if u < len(sc.uav_spawn_boxes_m):
            x0, x1, y0, y1 = sc.uav_spawn_boxes_m[u]
        else:
            x0, x1, y0, y1 = 0.0, sc.area_x_max_m, 0.0, sc.area_y_max_m
        uav_pos[u, 0] = uav_rng.uniform(x0, x1)
        uav_pos[u, 1] = uav_rng.uniform(y0, y1)

    if sc.sat_pos_m is not None:
        sat_pos = np.asarray(sc.sat_pos_m, dtype=float).reshape(N, 2)
    else:
        sat_pos = default_sat_layout(cfg)

    gm_rng = substream(seed, "gm-init")
    heading = gm_rng.uniform(-math.pi, math.pi, I)
    mean_vel = cfg.mobility.gm_mean_speed_mps * np.column_stack(
        [np.cos(heading), np.sin(heading)])
    # Start at the stationary velocity law N(mean, noise_std^2) per axis.
    ud_vel = mean_vel + cfg.mobility.gm_noise_std_mps * gm_rng.normal(
        size=(I, 2))

    power_rng = substream(seed, "tx-power")
    lo, hi = cfg.channel.tx_power_range_dbm
    ud_tx_power_w = dbm_to_watts(power_rng.uniform(lo, hi, I))

    bits, cpb, deadline = sample_tasks(
        cfg,
        substream(seed, "task-size"),
        substream(seed, "task-density"),
        substream(seed, "task-deadline"),
        I,
    )

    return WorldState(
        slot=0,
        ud_pos=ud_pos,
        ud_vel=ud_vel,
        ud_mean_vel=mean_vel,
        ud_tx_power_w=np.asarray(ud_tx_power_w, dtype=float),
        uav_pos=uav_pos,
        sat_pos=sat_pos,
        ud_energy_j=np.full(I, cfg.ud_budget_j(), dtype=float),
        uav_energy_j=np.full(U, cfg.energy.uav_budget_j, dtype=float),
        task_bits=bits,
        task_cycles_per_bit=cpb,
        task_deadline_s=deadline,
    )
