"""Scenario configuration: schema, defaults, file I/O, validation.

The config file is YAML with one section per subsystem.  Field names carry
their unit as a suffix (_m, _s, _hz, _bits, _dbm, _j, _mps, _bps, _cpB).
Unknown sections or keys are hard errors at load time; firing a run with a
misspelled key silently falling back to a default is the failure mode this
guards against.

Two unit conventions are normalized at the boundary rather than stored:
uplink powers are configured in dBm and converted to watts when sampled,
and computation density is configured in cycles/byte (the usual tabletop
unit) but tasks carry cycles/bit internally because every formula
multiplies density by a size in bits.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field
from typing import Optional

import yaml


def dbm_to_watts(dbm: float) -> float:
    """10^((dBm - 30)/10); 20 dBm -> 0.1 W."""
    return 10.0 ** ((dbm - 30.0) / 10.0)


@dataclass
class ScenarioSection:
    """Geometry, population and episode length."""

    area_x_max_m: float = 1000.0
    area_y_max_m: float = 1000.0
    num_uds: int = 15
    num_uavs: int = 3
    num_sats: int = 1
    horizon_slots: int = 100
    slot_len_s: float = 1.0
    uav_alt_m: float = 100.0
    sat_alt_m: float = 1.0e6
    # Per-UAV spawn boxes [xmin, xmax, ymin, ymax]; UAVs beyond the list
    # spawn uniformly over the whole area.
    uav_spawn_boxes_m: list = field(
        default_factory=lambda: [
            [150.0, 250.0, 150.0, 250.0],
            [750.0, 850.0, 150.0, 250.0],
            [450.0, 550.0, 750.0, 850.0],
        ]
    )
    # Horizontal satellite positions [[x, y], ...]; null -> synthetic layout
    # (area centre, then a ring of radius sat_alt/2 for the rest).
    sat_pos_m: Optional[list] = None
    seed: int = 0


@dataclass
class MobilitySection:
    uav_v_max_mps: float = 25.0
    safety_dist_m: float = 10.0
    gm_alpha: float = 0.85          # Gauss-Markov memory, 1 = straight line
    gm_mean_speed_mps: float = 1.0  # per-UD mean speed along a random heading
    gm_noise_std_mps: float = 0.3


@dataclass
class TasksSection:
    """Per-slot task draws; uniform over each closed range."""

    size_range_bits: list = field(default_factory=lambda: [1.0e6, 5.0e6])
    density_range_cpB: list = field(default_factory=lambda: [1000.0, 1500.0])
    deadline_range_s: list = field(default_factory=lambda: [1.0, 5.0])


@dataclass
class ChannelSection:
    tx_power_range_dbm: list = field(default_factory=lambda: [20.0, 25.0])
    uav_band_total_hz: float = 1.0e7   # shared equally by a UAV's coalition
    sat_band_hz: float = 1.0e6         # per UD-satellite link, not shared
    noise_w: float = 1.58e-13
    sat_noise_w: Optional[float] = None   # null -> noise_w
    uav_carrier_hz: float = 5.8e9
    sat_carrier_hz: float = 3.0e10
    los_e1: float = 4.88
    los_e2: float = 0.43
    excess_los_db: float = 0.1
    excess_nlos_db: float = 21.0
    rain_shape: float = 2.0
    rain_scale_db: float = 3.0
    # False: excess loss is the LoS-probability-weighted expectation.
    # True: draw the LoS state per evaluation instead.
    bernoulli_los: bool = False


@dataclass
class ComputeSection:
    ud_f_hz: float = 3.0e8
    uav_f_max_hz: float = 3.0e9
    switched_capacitance: float = 1.0e-27  # J per cycle per Hz^2
    uav_energy_per_cycle_j: float = 1.0e-9


@dataclass
class CloudSection:
    isl_rate_bps: float = 1.0e8
    sat_ground_rate_bps: float = 1.0e8
    gs_pos_m: list = field(default_factory=lambda: [5.0e5, 5.0e5])
    # "ring" or an explicit edge list [[a, b], ...] over satellite indices.
    isl_links: object = "ring"
    # Satellite indices with a direct ground-station link; null -> the one
    # nearest the GS.
    gs_sats: Optional[list] = None


@dataclass
class EnergySection:
    uav_budget_j: float = 36000.0
    ud_budget_j: Optional[float] = None  # null -> 3600 J per GHz of ud_f_hz
    prop_deltas: list = field(default_factory=lambda: [4.0, 2.0, 3.0, 1.0])
    rotor_tip_speed_mps: float = 120.0


@dataclass
class CostSection:
    w_delay: float = 0.5
    w_energy: float = 0.5


@dataclass
class GameSection:
    coverage_radius_m: float = 300.0
    max_sweep_factor: int = 50  # sweep cap = factor * num_uds


@dataclass
class RlSection:
    w_system: float = 1.0
    w_individual: float = 0.5
    deadline_penalty: float = 10.0
    boundary_penalty: float = 5.0
    collision_penalty: float = 10.0
    gamma: float = 0.95
    actor_lr: float = 5.0e-4
    critic_lr: float = 5.0e-4
    target_rate: float = 5.0e-3   # Polyak rate toward the online nets
    policy_delay: int = 5         # actor/target update period in env steps
    buffer_size: int = 100000
    batch_size: int = 256
    noise_scale: float = 0.1      # exploration std in squashed action units
    noise_decay: float = 0.999    # per-episode multiplicative decay
    hidden_sizes: list = field(default_factory=lambda: [64, 64])
    cost_ref: Optional[float] = None  # reward cost normalizer; null -> num_uds
    uav_reward_literal: bool = False  # served-cost sum enters with '+'
    uav_obs_served: bool = False      # append served-UD positions to UAV obs


@dataclass
class ScenarioConfig:
    scenario: ScenarioSection = field(default_factory=ScenarioSection)
    mobility: MobilitySection = field(default_factory=MobilitySection)
    tasks: TasksSection = field(default_factory=TasksSection)
    channel: ChannelSection = field(default_factory=ChannelSection)
    compute: ComputeSection = field(default_factory=ComputeSection)
    cloud: CloudSection = field(default_factory=CloudSection)
    energy: EnergySection = field(default_factory=EnergySection)
    cost: CostSection = field(default_factory=CostSection)
    game: GameSection = field(default_factory=GameSection)
    rl: RlSection = field(default_factory=RlSection)

    # Resolved values for the null-able fields.

    def sat_noise_w(self) -> float:
        ch = self.channel
        return ch.noise_w if ch.sat_noise_w is None else ch.sat_noise_w

    def ud_budget_j(self) -> float:
        en = self.energy
        if en.ud_budget_j is not None:
            return en.ud_budget_j
        return 3600.0 * self.compute.ud_f_hz / 1.0e9

    def cost_ref(self) -> float:
        if self.rl.cost_ref is not None:
            return self.rl.cost_ref
        return float(self.scenario.num_uds)


_SECTIONS = {
    "scenario": ScenarioSection,
    "mobility": MobilitySection,
    "tasks": TasksSection,
    "channel": ChannelSection,
    "compute": ComputeSection,
    "cloud": CloudSection,
    "energy": EnergySection,
    "cost": CostSection,
    "game": GameSection,
    "rl": RlSection,
}


def default_config() -> ScenarioConfig:
    return ScenarioConfig()


def _fill_section(section_cls, name: str, data: dict):
    known = {f.name for f in dataclasses.fields(section_cls)}
    unknown = set(data) - known
    if unknown:
        raise ValueError(
            f"unknown key(s) in section '{name}': {sorted(unknown)}; "
            f"known keys: {sorted(known)}"
        )
    return section_cls(**data)


def config_from_dict(data: dict) -> ScenarioConfig:
    """Build a config from a nested dict; unknown keys are hard errors."""
    if not isinstance(data, dict):
        raise ValueError("config root must be a mapping of sections")
    unknown = set(data) - set(_SECTIONS)
    if unknown:
        raise ValueError(
            f"unknown section(s): {sorted(unknown)}; "
            f"known sections: {sorted(_SECTIONS)}"
        )
    kwargs = {}
    for name, cls in _SECTIONS.items():
        if name in data:
            section = data[name]
            if not isinstance(section, dict):
                raise ValueError(f"section '{name}' must be a mapping")
            kwargs[name] = _fill_section(cls, name, section)
    return ScenarioConfig(**kwargs)


def config_to_dict(cfg: ScenarioConfig) -> dict:
    return dataclasses.asdict(cfg)


def load_config(path: str) -> ScenarioConfig:
    with open(path, "r", encoding="utf8") as fh:
        data = yaml.safe_load(fh)
    if data is None:
        data = {}
    return config_from_dict(data)


def save_config(cfg: ScenarioConfig, path: str) -> None:
    with open(path, "w", encoding="utf8") as fh:
        fh.write(config_to_yaml(cfg))


def config_to_yaml(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False)


def config_from_yaml(text: str) -> ScenarioConfig:
    data = yaml.safe_load(text)
    if data is None:
        data = {}
    return config_from_dict(data)


def config_hash(cfg: ScenarioConfig) -> str:
    """Content hash of the config, embedded in every output for provenance."""
    canon = json.dumps(config_to_dict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf8")).hexdigest()[:16]


@dataclass
class ValidationReport:
    issues: list = field(default_factory=list)  # (field_path, message)

    @property
    def ok(self) -> bool:
        return not self.issues

    def add(self, path: str, message: str) -> None:
        self.issues.append((path, message))

    def summary(self) -> str:
        if self.ok:
            return "config ok"
        lines = [f"{p}: {m}" for p, m in self.issues]
        return "\n".join(lines)


def _check_range(report, path, rng, positive=True):
    if not (isinstance(rng, (list, tuple)) and len(rng) == 2):
        report.add(path, "must be a [low, high] pair")
        return
    lo, hi = rng
    if lo > hi:
        report.add(path, f"low {lo} exceeds high {hi}")
    if positive and lo <= 0:
        report.add(path, "low end must be > 0")


def validate_config(cfg: ScenarioConfig) -> ValidationReport:
    """Check every invariant; reports all violations, never mutates."""
    r = ValidationReport()
    sc, mob, tk, ch = cfg.scenario, cfg.mobility, cfg.tasks, cfg.channel
    cp, cl, en, ct, gm, rl = (cfg.compute, cfg.cloud, cfg.energy, cfg.cost,
                              cfg.game, cfg.rl)

    if sc.area_x_max_m <= 0 or sc.area_y_max_m <= 0:
        r.add("scenario.area", "area dimensions must be > 0")
    if sc.num_uds < 1:
        r.add("scenario.num_uds", "must be >= 1")
    if sc.num_uavs < 0:
        r.add("scenario.num_uavs", "must be >= 0")
    if sc.num_sats < 0:
        r.add("scenario.num_sats", "must be >= 0")
    if sc.num_uavs + sc.num_sats < 1:
        r.add("scenario", "need at least one server (UAV or satellite)")
    if sc.horizon_slots < 1:
        r.add("scenario.horizon_slots", "must be >= 1")
    if sc.slot_len_s <= 0:
        r.add("scenario.slot_len_s", "must be > 0")
    if sc.uav_alt_m <= 0:
        r.add("scenario.uav_alt_m", "must be > 0")
    if sc.sat_alt_m <= 0:
        r.add("scenario.sat_alt_m", "must be > 0")
    for b, box in enumerate(sc.uav_spawn_boxes_m):
        if not (isinstance(box, (list, tuple)) and len(box) == 4):
            r.add(f"scenario.uav_spawn_boxes_m[{b}]",
                  "must be [xmin, xmax, ymin, ymax]")
            continue
        x0, x1, y0, y1 = box
        if not (0 <= x0 <= x1 <= sc.area_x_max_m
                and 0 <= y0 <= y1 <= sc.area_y_max_m):
            r.add(f"scenario.uav_spawn_boxes_m[{b}]",
                  "must be ordered and inside the area")
    if sc.sat_pos_m is not None:
        if len(sc.sat_pos_m) != sc.num_sats:
            r.add("scenario.sat_pos_m",
                  f"{len(sc.sat_pos_m)} positions for {sc.num_sats} satellites")
        for k, pos in enumerate(sc.sat_pos_m):
            if not (isinstance(pos, (list, tuple)) and len(pos) == 2):
                r.add(f"scenario.sat_pos_m[{k}]", "must be [x, y]")
    if sc.seed < 0:
        r.add("scenario.seed", "must be >= 0")

    if mob.uav_v_max_mps <= 0:
        r.add("mobility.uav_v_max_mps", "must be > 0")
    if mob.safety_dist_m <= 0:
        r.add("mobility.safety_dist_m", "must be > 0")
    if not 0 <= mob.gm_alpha <= 1:
        r.add("mobility.gm_alpha", "must lie in [0, 1]")
    if mob.gm_mean_speed_mps < 0:
        r.add("mobility.gm_mean_speed_mps", "must be >= 0")
    if mob.gm_noise_std_mps < 0:
        r.add("mobility.gm_noise_std_mps", "must be >= 0")

    _check_range(r, "tasks.size_range_bits", tk.size_range_bits)
    _check_range(r, "tasks.density_range_cpB", tk.density_range_cpB)
    _check_range(r, "tasks.deadline_range_s", tk.deadline_range_s)

    _check_range(r, "channel.tx_power_range_dbm", ch.tx_power_range_dbm,
                 positive=False)
    for name in ("uav_band_total_hz", "sat_band_hz", "noise_w",
                 "uav_carrier_hz", "sat_carrier_hz"):
        if getattr(ch, name) <= 0:
            r.add(f"channel.{name}", "must be > 0")
    if ch.sat_noise_w is not None and ch.sat_noise_w <= 0:
        r.add("channel.sat_noise_w", "must be > 0 (or null)")
    if ch.los_e1 <= 0 or ch.los_e2 <= 0:
        r.add("channel.los_e1/e2", "sigmoid constants must be > 0")
    if ch.excess_los_db < 0 or ch.excess_nlos_db < 0:
        r.add("channel.excess_loss", "excess losses must be >= 0")
    if ch.rain_shape <= 0 or ch.rain_scale_db < 0:
        r.add("channel.rain", "shape must be > 0 and scale >= 0")

    if cp.ud_f_hz <= 0 or cp.uav_f_max_hz <= 0:
        r.add("compute.frequencies", "CPU frequencies must be > 0")
    if cp.switched_capacitance <= 0:
        r.add("compute.switched_capacitance", "must be > 0")
    if cp.uav_energy_per_cycle_j < 0:
        r.add("compute.uav_energy_per_cycle_j", "must be >= 0")

    if cl.isl_rate_bps <= 0 or cl.sat_ground_rate_bps <= 0:
        r.add("cloud.rates", "link rates must be > 0")
    if not (isinstance(cl.gs_pos_m, (list, tuple)) and len(cl.gs_pos_m) == 2):
        r.add("cloud.gs_pos_m", "must be [x, y]")
    if cl.isl_links != "ring":
        if not isinstance(cl.isl_links, (list, tuple)):
            r.add("cloud.isl_links", "must be 'ring' or an edge list")
        else:
            for e, edge in enumerate(cl.isl_links):
                ok = (isinstance(edge, (list, tuple)) and len(edge) == 2
                      and all(isinstance(v, int) for v in edge))
                if not ok or edge[0] == edge[1] \
                        or not all(0 <= v < sc.num_sats for v in edge):
                    r.add(f"cloud.isl_links[{e}]",
                          "must join two distinct satellite indices")
    if cl.gs_sats is not None:
        for k in cl.gs_sats:
            if not (isinstance(k, int) and 0 <= k < sc.num_sats):
                r.add("cloud.gs_sats", f"satellite index {k} out of range")

    if en.uav_budget_j <= 0:
        r.add("energy.uav_budget_j", "must be > 0")
    if en.ud_budget_j is not None and en.ud_budget_j <= 0:
        r.add("energy.ud_budget_j", "must be > 0 (or null)")
    if len(en.prop_deltas) != 4 or any(d < 0 for d in en.prop_deltas):
        r.add("energy.prop_deltas", "must be four non-negative constants")
    if en.rotor_tip_speed_mps <= 0:
        r.add("energy.rotor_tip_speed_mps", "must be > 0")

    if ct.w_delay < 0 or ct.w_energy < 0:
        r.add("cost.weights", "must be >= 0")
    if ct.w_delay + ct.w_energy <= 0:
        r.add("cost.weights", "at least one weight must be > 0")

    if gm.coverage_radius_m <= 0:
        r.add("game.coverage_radius_m", "must be > 0")
    if gm.max_sweep_factor < 1:
        r.add("game.max_sweep_factor", "must be >= 1")

    if rl.w_system < 0 or rl.w_individual < 0:
        r.add("rl.weights", "must be >= 0")
    for name in ("deadline_penalty", "boundary_penalty", "collision_penalty"):
        if getattr(rl, name) < 0:
            r.add(f"rl.{name}", "must be >= 0")
    if not 0 <= rl.gamma < 1:
        r.add("rl.gamma", "must lie in [0, 1)")
    if rl.actor_lr <= 0 or rl.critic_lr <= 0:
        r.add("rl.learning_rates", "must be > 0")
    if not 0 < rl.target_rate <= 1:
        r.add("rl.target_rate", "must lie in (0, 1]")
    if rl.policy_delay < 1:
        r.add("rl.policy_delay", "must be >= 1")
    if rl.buffer_size < 1:
        r.add("rl.buffer_size", "must be >= 1")
    if not 1 <= rl.batch_size <= rl.buffer_size:
        r.add("rl.batch_size", "must lie in [1, buffer_size]")
    if rl.noise_scale < 0:
        r.add("rl.noise_scale", "must be >= 0")
    if not 0 < rl.noise_decay <= 1:
        r.add("rl.noise_decay", "must lie in (0, 1]")
    if not rl.hidden_sizes or any(
            not isinstance(h, int) or h < 1 for h in rl.hidden_sizes):
        r.add("rl.hidden_sizes", "must be a non-empty list of positive ints")
    if rl.cost_ref is not None and rl.cost_ref <= 0:
        r.add("rl.cost_ref", "must be > 0 (or null)")

    return r
