"""Slot-stepped decision environment over the simulated system.

Agents are the UDs (each picks an offload ratio) followed by the UAVs
(each picks a heading and speed).  One step runs the whole slot pipeline:
draw the slot's channel state, associate UDs to servers, split each UAV's
compute budget, price out every task's delay and energy, move everyone,
charge energy budgets, draw the next slot's tasks, and score rewards.

Association runs the coalitional game by default; "nearest" instead sends
every UD to its geometrically nearest server by 3D distance, satellites
included and coverage ignored, which is the no-game ablation.  The compute
split is the square-root closed form by default or the uniform ablation
split, applied consistently inside the game's utilities and in the
executed allocation.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

from .allocation import allocate_computing, equal_allocate
from .coalition import (CoalitionPartition, build_context, build_slot_links,
                        run_game)
from .computation import (StepOutcome, cloud_outcome, combine_cost,
                          edge_outcome, local_outcome, propulsion_energy)
from .config import ScenarioConfig
from .constellation import Constellation, cloud_path
from .mobility import UavControl, check_safety, step_ud, step_uav
from .rng import substream
from .world import WorldState, init_world, sample_tasks

ALLOCATE_RULES = {"sqrt": allocate_computing, "equal": equal_allocate}


def action_bounds(cfg: ScenarioConfig, agent: int):
    """(lo, hi) arrays for one agent's environment-facing action."""
    if agent < cfg.scenario.num_uds:
        return np.array([0.0]), np.array([1.0])
    v_max = cfg.mobility.uav_v_max_mps
    return np.array([-np.pi, 0.0]), np.array([np.pi, v_max])


def observation_dims(cfg: ScenarioConfig) -> List[int]:
    uav_dim = 3
    if cfg.rl.uav_obs_served:
        uav_dim += 2 * cfg.scenario.num_uds
    return [5] * cfg.scenario.num_uds + [uav_dim] * cfg.scenario.num_uavs


def _norm_range(value, lo, hi):
    if hi > lo:
        return (value - lo) / (hi - lo)
    return np.full_like(np.asarray(value, dtype=float), 0.5)


def nearest_assignment(world: WorldState, cfg: ScenarioConfig) -> np.ndarray:
    """Per-UD index of the nearest server by 3D distance.

    UAV altitude and satellite altitude both count; coverage radius and
    cloud reachability do not.  Servers are indexed UAVs first.
    """
    sc = cfg.scenario
    cols = []
    if sc.num_uavs:
        horiz = np.linalg.norm(
            world.ud_pos[:, None, :] - world.uav_pos[None, :, :], axis=2)
        cols.append(np.hypot(horiz, sc.uav_alt_m))
    if sc.num_sats:
        horiz = np.linalg.norm(
            world.ud_pos[:, None, :] - world.sat_pos[None, :, :], axis=2)
        cols.append(np.hypot(horiz, sc.sat_alt_m))
    if not cols:
        raise ValueError("no servers to associate with")
    return np.argmin(np.concatenate(cols, axis=1), axis=1)


def split_joint_action(joint_action, cfg: ScenarioConfig):
    """Flat action vector -> (ratios (I,), controls list per UAV)."""
    sc = cfg.scenario
    flat = np.asarray(joint_action, dtype=float).ravel()
    expect = sc.num_uds + 2 * sc.num_uavs
    if len(flat) != expect:
        raise ValueError(f"joint action needs {expect} values, got {len(flat)}")
    ratios = np.clip(flat[:sc.num_uds], 0.0, 1.0)
    controls = []
    for u in range(sc.num_uavs):
        theta, speed = flat[sc.num_uds + 2 * u: sc.num_uds + 2 * u + 2]
        controls.append(UavControl.make(theta, speed,
                                        cfg.mobility.uav_v_max_mps))
    return ratios, controls


def env_step(world: WorldState, joint_action, cfg: ScenarioConfig,
             rng: np.random.Generator, con: Optional[Constellation] = None,
             paths: Optional[list] = None, association: str = "game",
             allocate_fn: Callable = allocate_computing):
    """Run one slot.  Returns (outcome, rewards, next world, terminal).

    Consumes rng in a fixed order (channel draws, game proposals, UD
    mobility noise, next tasks) so identical seeds replay identically.
    """
    sc = cfg.scenario
    I, U = sc.num_uds, sc.num_uavs
    if con is None:
        con = Constellation.from_config(cfg)
    ratios, controls = split_joint_action(joint_action, cfg)

    links = build_slot_links(world, cfg, con, rng, paths)
    ctx = build_context(world, ratios, cfg, links, allocate_fn)
    if association == "game":
        part = run_game(ctx, rng,
                        max_sweeps=cfg.game.max_sweep_factor * max(1, I))
    elif association == "nearest":
        part = CoalitionPartition(nearest_assignment(world, cfg),
                                  ctx.num_servers)
    else:
        raise ValueError(f"unknown association mode {association!r}")

    # price the slot at its start-of-slot geometry
    w_T, w_E = cfg.cost.w_delay, cfg.cost.w_energy
    t_local = np.zeros(I)
    e_local = np.zeros(I)
    t_off = np.zeros(I)
    e_off = np.zeros(I)
    t_total = np.zeros(I)
    e_total = np.zeros(I)
    cost_terms = np.zeros(I)
    f_alloc = np.zeros(I)
    uav_e_compute = np.zeros(U)

    for i in range(I):
        t_local[i], e_local[i] = local_outcome(
            world.task_bits[i], world.task_cycles_per_bit[i], ratios[i],
            cfg.compute.ud_f_hz, cfg.compute.switched_capacitance)

    for u in range(U):
        members = part.members(u)
        if len(members) == 0:
            continue
        f = allocate_fn(ctx.works[members], cfg.compute.uav_f_max_hz)
        share = cfg.channel.uav_band_total_hz / len(members)
        for f_i, i in zip(f, members):
            rate = share * np.log2(1.0 + links.uav_snr[i, u])
            t_o, e_tx, e_srv = edge_outcome(
                world.task_bits[i], world.task_cycles_per_bit[i], ratios[i],
                rate, f_i, world.ud_tx_power_w[i],
                cfg.compute.uav_energy_per_cycle_j)
            t_off[i], e_off[i] = t_o, e_tx
            f_alloc[i] = f_i
            uav_e_compute[u] += e_srv

    for n in range(sc.num_sats):
        server = U + n
        members = part.members(server)
        if len(members) and links.paths[n] is None:
            raise ValueError(f"satellite {n} has no route to the cloud")
        for i in members:
            t_off[i], e_off[i] = cloud_outcome(
                world.task_bits[i], ratios[i], links.sat_rate[i, n],
                world.ud_tx_power_w[i], links.sat_dist[i, n], links.paths[n],
                cfg.cloud.isl_rate_bps, cfg.cloud.sat_ground_rate_bps)

    for i in range(I):
        t_total[i], e_total[i], cost_terms[i] = combine_cost(
            t_local[i], e_local[i], t_off[i], e_off[i], w_T, w_E)
    deadline_violated = t_total > world.task_deadline_s
    system_cost = float(np.sum(cost_terms))

    # motion: UAVs follow their commands, UDs follow the mobility model
    nxt = world.copy()
    boundary = np.zeros(U, dtype=bool)
    for u in range(U):
        nxt.uav_pos[u], boundary[u] = step_uav(
            world.uav_pos[u], controls[u], sc.slot_len_s,
            (sc.area_x_max_m, sc.area_y_max_m))
    unsafe = check_safety(nxt.uav_pos, cfg.mobility.safety_dist_m)
    collision = np.zeros(U, dtype=bool)
    for a, b in unsafe:
        collision[a] = True
        collision[b] = True
    nxt.ud_pos, nxt.ud_vel = step_ud(
        world.ud_pos, world.ud_vel, world.ud_mean_vel,
        cfg.mobility.gm_alpha, cfg.mobility.gm_noise_std_mps,
        sc.slot_len_s, (sc.area_x_max_m, sc.area_y_max_m), rng)

    uav_e_prop = np.array([
        propulsion_energy(controls[u].speed_mps, cfg.energy.prop_deltas,
                          cfg.energy.rotor_tip_speed_mps, sc.slot_len_s)
        for u in range(U)
    ])
    uav_e_total = uav_e_compute + uav_e_prop
    nxt.ud_energy_j = np.maximum(world.ud_energy_j - e_local - e_off, 0.0)
    nxt.uav_energy_j = world.uav_energy_j - uav_e_total

    nxt.slot = world.slot + 1
    nxt.task_bits, nxt.task_cycles_per_bit, nxt.task_deadline_s = \
        sample_tasks(cfg, rng, rng, rng, I)

    terminal = nxt.slot >= sc.horizon_slots \
        or (U > 0 and bool(np.any(nxt.uav_energy_j <= 0.0)))

    outcome = StepOutcome(
        slot=world.slot, cost=system_cost, t_local=t_local,
        t_offload=t_off, t_total=t_total, e_local=e_local, e_offload=e_off,
        e_total=e_total, deadline_violated=deadline_violated,
        assignment=part.assignment.copy(), f_alloc=f_alloc,
        offload_ratio=ratios.copy(), uav_e_compute=uav_e_compute,
        uav_e_propulsion=uav_e_prop, uav_e_total=uav_e_total,
        uav_boundary=boundary, uav_collision=collision,
        extras={"rain_db": links.rain_db.copy()})
    rewards = step_rewards(outcome, part, cfg)
    return outcome, rewards, nxt, terminal


def step_rewards(outcome: StepOutcome, part: CoalitionPartition,
                 cfg: ScenarioConfig) -> np.ndarray:
    """Per-agent rewards, UDs first then UAVs."""
    sc = cfg.scenario
    rl = cfg.rl
    individual = cfg.cost.w_delay * outcome.t_total \
        + cfg.cost.w_energy * outcome.e_total
    r_penalty = -rl.deadline_penalty \
        * float(np.count_nonzero(outcome.deadline_violated))
    shared = rl.w_system * (-outcome.cost / cfg.cost_ref() + r_penalty)
    rewards = np.empty(sc.num_uds + sc.num_uavs)
    rewards[:sc.num_uds] = shared - rl.w_individual * individual
    for u in range(sc.num_uavs):
        served = float(np.sum(individual[part.members(u)]))
        if rl.uav_reward_literal:
            own = served
        else:
            own = -served
        own -= rl.boundary_penalty * bool(outcome.uav_boundary[u])
        own -= rl.collision_penalty * bool(outcome.uav_collision[u])
        rewards[sc.num_uds + u] = shared + rl.w_individual * own
    return rewards


@dataclass
class EpisodeState:
    world: WorldState
    rng: np.random.Generator
    last_assignment: Optional[np.ndarray]


class SaginMecEnv:
    """Episode manager: reset/step/observe with per-episode substreams."""

    def __init__(self, cfg: ScenarioConfig, seed: int,
                 association: str = "game", allocate_rule: str = "sqrt"):
        if allocate_rule not in ALLOCATE_RULES:
            raise ValueError(f"unknown allocate rule {allocate_rule!r}")
        self.cfg = cfg
        self.seed = int(seed)
        self.association = association
        self.allocate_fn = ALLOCATE_RULES[allocate_rule]
        self.con = Constellation.from_config(cfg)
        self.paths = []
        for n in range(cfg.scenario.num_sats):
            try:
                self.paths.append(cloud_path(self.con, n))
            except ValueError:
                self.paths.append(None)
        self._ep: Optional[EpisodeState] = None

    @property
    def num_agents(self) -> int:
        return self.cfg.scenario.num_uds + self.cfg.scenario.num_uavs

    @property
    def world(self) -> WorldState:
        """Current slot's world, for tracing; valid after reset()."""
        if self._ep is None:
            raise RuntimeError("reset() before world")
        return self._ep.world

    def reset(self, episode: int = 0) -> List[np.ndarray]:
        """Fresh world for the episode; returns initial observations."""
        draw = substream(self.seed, "episode", episode)
        world_seed = int(draw.integers(0, 2 ** 62))
        world = init_world(self.cfg, world_seed)
        self._ep = EpisodeState(
            world=world, rng=substream(self.seed, "env", episode),
            last_assignment=None)
        return self.observations()

    def observations(self) -> List[np.ndarray]:
        """Per-agent views of the current slot, all components in [0, 1]."""
        if self._ep is None:
            raise RuntimeError("reset() before observations()")
        cfg = self.cfg
        sc = cfg.scenario
        world = self._ep.world
        size_lo, size_hi = cfg.tasks.size_range_bits
        den_lo, den_hi = (d / 8.0 for d in cfg.tasks.density_range_cpB)
        obs = []
        for i in range(sc.num_uds):
            obs.append(np.array([
                world.ud_pos[i, 0] / sc.area_x_max_m,
                world.ud_pos[i, 1] / sc.area_y_max_m,
                _norm_range(world.task_bits[i], size_lo, size_hi),
                _norm_range(world.task_cycles_per_bit[i], den_lo, den_hi),
                np.clip(world.ud_energy_j[i] / cfg.ud_budget_j(), 0.0, 1.0),
            ]))
        for u in range(sc.num_uavs):
            base = [
                world.uav_pos[u, 0] / sc.area_x_max_m,
                world.uav_pos[u, 1] / sc.area_y_max_m,
                np.clip(world.uav_energy_j[u] / cfg.energy.uav_budget_j,
                        0.0, 1.0),
            ]
            if cfg.rl.uav_obs_served:
                served = np.zeros(2 * sc.num_uds)
                if self._ep.last_assignment is not None:
                    members = np.nonzero(self._ep.last_assignment == u)[0]
                    for slot_at, i in enumerate(members):
                        served[2 * slot_at] = world.ud_pos[i, 0] \
                            / sc.area_x_max_m
                        served[2 * slot_at + 1] = world.ud_pos[i, 1] \
                            / sc.area_y_max_m
                base.extend(served)
            obs.append(np.array(base))
        return obs

    def step(self, joint_action):
        """(observations, rewards, outcome, terminal) after one slot."""
        if self._ep is None:
            raise RuntimeError("reset() before step()")
        outcome, rewards, nxt, terminal = env_step(
            self._ep.world, joint_action, self.cfg, self._ep.rng,
            con=self.con, paths=self.paths, association=self.association,
            allocate_fn=self.allocate_fn)
        self._ep.world = nxt
        self._ep.last_assignment = outcome.assignment
        return self.observations(), rewards, outcome, terminal
