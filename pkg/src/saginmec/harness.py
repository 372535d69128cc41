"""Episode runner, benchmark metrics, and parameter sweeps.

Everything here is deterministic given (config, policy, seed): reports
and traces carry the config content hash instead of timestamps, so two
runs of the same triple are byte-identical.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Iterable, List, Optional

import numpy as np

from .baselines import make_policy
from .config import (ScenarioConfig, config_from_dict, config_hash,
                     config_to_dict, validate_config)
from .env import SaginMecEnv

SWEEP_AXES = ("num_uds", "task_size_mean", "f_uav_max")

# the four benchmark indicators plus the constraint counters
METRIC_FIELDS = ("aggregated_ud_cost", "avg_task_delay", "avg_ud_energy",
                 "avg_uav_energy", "deadline_violation_rate",
                 "boundary_count", "collision_count")


@dataclass
class MetricsReport:
    policy: str
    seed: int
    config_hash: str
    num_slots: int
    aggregated_ud_cost: float
    avg_task_delay: float
    avg_ud_energy: float
    avg_uav_energy: float
    deadline_violation_rate: float
    boundary_count: int
    collision_count: int
    trace: Optional[List[dict]] = field(default=None, repr=False)

    def to_dict(self) -> dict:
        out = {k: getattr(self, k)
               for k in ("policy", "seed", "config_hash", "num_slots",
                         *METRIC_FIELDS)}
        return out


def _slot_record(world, outcome) -> dict:
    """One trace line: everything needed to re-derive the slot's metrics."""
    return {
        "slot": int(outcome.slot),
        "cost": float(outcome.cost),
        "offload_ratio": outcome.offload_ratio.tolist(),
        "assignment": outcome.assignment.tolist(),
        "f_alloc": outcome.f_alloc.tolist(),
        "t_local": outcome.t_local.tolist(),
        "t_offload": outcome.t_offload.tolist(),
        "t_total": outcome.t_total.tolist(),
        "e_local": outcome.e_local.tolist(),
        "e_offload": outcome.e_offload.tolist(),
        "e_total": outcome.e_total.tolist(),
        "deadline_violated": [int(v) for v in outcome.deadline_violated],
        "uav_e_compute": outcome.uav_e_compute.tolist(),
        "uav_e_propulsion": outcome.uav_e_propulsion.tolist(),
        "uav_e_total": outcome.uav_e_total.tolist(),
        "uav_boundary": [int(v) for v in outcome.uav_boundary],
        "uav_collision": [int(v) for v in outcome.uav_collision],
        "rain_db": outcome.extras["rain_db"].tolist(),
        "task_bits": world.task_bits.tolist(),
        "task_cycles_per_bit": world.task_cycles_per_bit.tolist(),
        "task_deadline_s": world.task_deadline_s.tolist(),
        "ud_pos": world.ud_pos.tolist(),
        "uav_pos": world.uav_pos.tolist(),
    }


def run_episode(cfg: ScenarioConfig, policy: str = "maddpg-cocg",
                seed: int = 0, checkpoint: Optional[str] = None,
                with_trace: bool = False, episode: int = 0,
                strict_checkpoint: bool = True) -> MetricsReport:
    """Play one full episode under a named policy and score it."""
    report = validate_config(cfg)
    if not report.ok:
        raise ValueError(f"invalid config: {report.summary()}")
    policy_obj, association, rule = make_policy(
        policy, cfg, seed=seed, checkpoint=checkpoint,
        strict=strict_checkpoint)
    env = SaginMecEnv(cfg, seed, association=association,
                      allocate_rule=rule)
    obs = env.reset(episode)

    sc = cfg.scenario
    trace = [] if with_trace else None
    agg_cost = 0.0
    sum_delay = 0.0
    sum_ud_energy = 0.0
    sum_uav_energy = 0.0
    violations = 0
    boundary = 0
    collision = 0
    slots = 0
    terminal = False
    while not terminal:
        start_world = env.world
        action = policy_obj.act(obs)
        obs, _, outcome, terminal = env.step(action)
        if trace is not None:
            trace.append(_slot_record(start_world, outcome))
        agg_cost += outcome.cost
        sum_delay += float(np.sum(outcome.t_total))
        sum_ud_energy += float(np.sum(outcome.e_total))
        sum_uav_energy += float(np.sum(outcome.uav_e_total))
        violations += int(np.count_nonzero(outcome.deadline_violated))
        boundary += int(np.count_nonzero(outcome.uav_boundary))
        collision += int(np.count_nonzero(outcome.uav_collision))
        slots += 1

    ud_samples = slots * sc.num_uds
    uav_samples = slots * sc.num_uavs
    return MetricsReport(
        policy=policy, seed=int(seed), config_hash=config_hash(cfg),
        num_slots=slots,
        aggregated_ud_cost=agg_cost,
        avg_task_delay=sum_delay / ud_samples,
        avg_ud_energy=sum_ud_energy / ud_samples,
        avg_uav_energy=sum_uav_energy / uav_samples if uav_samples else 0.0,
        deadline_violation_rate=violations / ud_samples,
        boundary_count=boundary, collision_count=collision,
        trace=trace)


def report_from_trace(trace: List[dict], cfg: ScenarioConfig) -> dict:
    """Recompute the metric fields from a trace alone.

    Per-slot cost is rebuilt from the per-UD delay and energy components,
    not read back, so this doubles as the cost-accounting audit.
    """
    w_T, w_E = cfg.cost.w_delay, cfg.cost.w_energy
    sc = cfg.scenario
    agg = 0.0
    sum_delay = 0.0
    sum_ud_energy = 0.0
    sum_uav_energy = 0.0
    violations = 0
    boundary = 0
    collision = 0
    for rec in trace:
        t_total = np.asarray(rec["t_total"])
        e_total = np.asarray(rec["e_total"])
        agg += float(np.sum(w_T * t_total + w_E * e_total))
        sum_delay += float(np.sum(t_total))
        sum_ud_energy += float(np.sum(e_total))
        sum_uav_energy += float(np.sum(rec["uav_e_total"]))
        violations += int(np.sum(rec["deadline_violated"]))
        boundary += int(np.sum(rec["uav_boundary"]))
        collision += int(np.sum(rec["uav_collision"]))
    slots = len(trace)
    ud_samples = slots * sc.num_uds
    uav_samples = slots * sc.num_uavs
    return {
        "aggregated_ud_cost": agg,
        "avg_task_delay": sum_delay / ud_samples,
        "avg_ud_energy": sum_ud_energy / ud_samples,
        "avg_uav_energy": sum_uav_energy / uav_samples if uav_samples
        else 0.0,
        "deadline_violation_rate": violations / ud_samples,
        "boundary_count": boundary,
        "collision_count": collision,
    }


def write_report(path: str, report: MetricsReport) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, sort_keys=True, indent=2)
        fh.write("\n")


def write_trace(path: str, report: MetricsReport) -> None:
    """Line-delimited records: one header line, then one line per slot."""
    if report.trace is None:
        raise ValueError("report carries no trace; run with with_trace=True")
    header = {"config_hash": report.config_hash, "policy": report.policy,
              "seed": report.seed, "num_slots": report.num_slots}
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(json.dumps(header, sort_keys=True) + "\n")
        for rec in report.trace:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_trace(path: str):
    """(header, records) back from write_trace's format."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln for ln in fh if ln.strip()]
    return json.loads(lines[0]), [json.loads(ln) for ln in lines[1:]]


def write_trajectory(path: str, report: MetricsReport,
                     cfg: ScenarioConfig) -> None:
    """Per-slot positions CSV for external plotting."""
    if report.trace is None:
        raise ValueError("report carries no trace; run with with_trace=True")
    sc = cfg.scenario
    cols = ["slot"]
    cols += [f"ud{i}_{ax}" for i in range(sc.num_uds) for ax in ("x", "y")]
    cols += [f"uav{u}_{ax}" for u in range(sc.num_uavs) for ax in ("x", "y")]
    lines = [f"# config_hash={report.config_hash}", ",".join(cols)]
    for rec in report.trace:
        vals = [str(rec["slot"])]
        vals += [repr(float(v)) for pos in rec["ud_pos"] for v in pos]
        vals += [repr(float(v)) for pos in rec["uav_pos"] for v in pos]
        lines.append(",".join(vals))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


# --- sweeps -----------------------------------------------------------


def apply_axis(cfg: ScenarioConfig, axis: str, value) -> ScenarioConfig:
    """Independent copy of cfg with one sweep axis applied."""
    out = config_from_dict(config_to_dict(cfg))
    if axis == "num_uds":
        out.scenario.num_uds = int(value)
    elif axis == "task_size_mean":
        lo, hi = cfg.tasks.size_range_bits
        mean = 0.5 * (lo + hi)
        scale = float(value) / mean
        out.tasks.size_range_bits = [lo * scale, hi * scale]
    elif axis == "f_uav_max":
        out.compute.uav_f_max_hz = float(value)
    else:
        raise ValueError(f"unknown sweep axis {axis!r}; choose from "
                         f"{SWEEP_AXES}")
    return out


def _sweep_cell(args):
    cfg, axis, value, seed, policy, checkpoint, strict = args
    report = run_episode(cfg, policy=policy, seed=seed,
                         checkpoint=checkpoint,
                         strict_checkpoint=strict)
    row = {"axis": axis, "value": float(value), "seed": int(seed),
           "policy": policy, "config_hash": report.config_hash}
    row.update({k: getattr(report, k) for k in METRIC_FIELDS})
    return row


def sweep(cfg: ScenarioConfig, axis: str, values: Iterable,
          seeds: Iterable[int], policy: str = "random",
          checkpoint=None, train_episodes: Optional[int] = None,
          map_fn: Callable = map):
    """(rows, aggregates) over the values x seeds grid.

    checkpoint may be a single path (reused for every cell; the config
    hash check is relaxed since swept cells differ from the training
    config) or a {value: path} mapping.  With train_episodes set and no
    checkpoint, a policy that needs one is trained per swept value on the
    first seed.  Cells are independent, so map_fn may be a parallel map.
    """
    from .baselines import POLICY_MODES
    values = list(values)
    seeds = [int(s) for s in seeds]
    needs_ckpt = POLICY_MODES[policy][2] if policy in POLICY_MODES else False

    per_value_ckpt = {}
    if needs_ckpt:
        if isinstance(checkpoint, dict):
            per_value_ckpt = {v: checkpoint[v] for v in values}
        elif checkpoint is not None:
            per_value_ckpt = {v: checkpoint for v in values}
        elif train_episodes is not None:
            from .maddpg import MaddpgTrainer
            import tempfile
            import os
            tmpdir = tempfile.mkdtemp(prefix="sweep_ckpt_")
            for v in values:
                cfg_v = apply_axis(cfg, axis, v)
                trainer = MaddpgTrainer(cfg_v, seed=seeds[0])
                trainer.train(train_episodes)
                path = os.path.join(tmpdir, f"{axis}_{v}.npz")
                trainer.save_checkpoint(path)
                per_value_ckpt[v] = path
        else:
            raise ValueError(f"policy {policy!r} needs a checkpoint or "
                             "train_episodes for a sweep")

    cells = []
    for v in values:
        cfg_v = apply_axis(cfg, axis, v)
        for s in seeds:
            # a shared checkpoint rarely matches the swept config's hash
            strict = False
            cells.append((cfg_v, axis, v, s, policy,
                          per_value_ckpt.get(v), strict))
    rows = list(map_fn(_sweep_cell, cells))

    aggregates = []
    for v in values:
        sub = [r for r in rows if r["value"] == float(v)]
        agg = {"axis": axis, "value": float(v), "policy": policy,
               "n_seeds": len(sub)}
        for k in METRIC_FIELDS:
            data = np.array([r[k] for r in sub], dtype=float)
            q25, q75 = np.percentile(data, [25.0, 75.0])
            agg[f"{k}_median"] = float(np.median(data))
            agg[f"{k}_iqr"] = float(q75 - q25)
        aggregates.append(agg)
    return rows, aggregates


def _rows_to_csv(path: str, rows: List[dict], cfg_hash: str) -> None:
    cols = list(rows[0].keys())
    lines = [f"# config_hash={cfg_hash}", ",".join(cols)]
    for row in rows:
        cells = []
        for c in cols:
            v = row[c]
            cells.append(repr(v) if isinstance(v, float) else str(v))
        lines.append(",".join(cells))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def write_sweep(path: str, rows: List[dict], aggregates: List[dict],
                cfg: ScenarioConfig) -> None:
    """Two CSVs: the raw grid at path, medians/IQRs at path + '.agg'."""
    if not rows:
        raise ValueError("empty sweep")
    base_hash = config_hash(cfg)
    _rows_to_csv(path, rows, base_hash)
    _rows_to_csv(path + ".agg", aggregates, base_hash)
