"""Ablation policies benchmarked against the full learned stack.

Three comparison points share the environment:

* maddpg-cocg: trained actors, game association, square-root allocation.
* ecra: trained actors and game association, but each UAV splits its
  compute budget equally among its requesting UDs, both inside the game's
  utilities and in the executed allocation.
* no: trained actors and square-root allocation, but association is
  plain nearest-server by 3D distance (no game).

ecra and no keep the trained actors on purpose: they ablate exactly one
decision layer each, so they need the same checkpoint the full stack
uses.  The random policy stands alone.
"""
from __future__ import annotations

from typing import Optional

import numpy as np

from .allocation import equal_allocate
from .config import ScenarioConfig
from .env import nearest_assignment
from .maddpg import MaddpgTrainer
from .rng import substream
from .world import WorldState

# policy name -> (association mode, allocation rule, needs checkpoint)
POLICY_MODES = {
    "maddpg-cocg": ("game", "sqrt", True),
    "ecra": ("game", "equal", True),
    "no": ("nearest", "sqrt", True),
    "random": ("game", "sqrt", False),
}


def policy_ecra(world: WorldState, ratios, assignment,
                cfg: ScenarioConfig) -> np.ndarray:
    """Per-UD compute allocation under the equal-split rule.

    Each UAV divides its full budget uniformly among associated UDs that
    actually request compute; satellite-assigned UDs get zero.
    """
    ratios = np.asarray(ratios, dtype=float)
    assignment = np.asarray(assignment)
    works = world.task_bits * world.task_cycles_per_bit * ratios
    f_alloc = np.zeros(cfg.scenario.num_uds)
    for u in range(cfg.scenario.num_uavs):
        members = np.nonzero(assignment == u)[0]
        if len(members):
            f_alloc[members] = equal_allocate(works[members],
                                              cfg.compute.uav_f_max_hz)
    return f_alloc


def policy_no(world: WorldState, cfg: ScenarioConfig) -> np.ndarray:
    """Nearest-server association, satellites included, coverage ignored."""
    return nearest_assignment(world, cfg)


class RandomPolicy:
    """Uniform actions over each agent's legal range, seeded."""

    def __init__(self, cfg: ScenarioConfig, seed: int):
        self.cfg = cfg
        self._rng = substream(seed, "policy", "random")

    def act(self, obs_list) -> np.ndarray:
        sc = self.cfg.scenario
        rng = self._rng
        parts = [rng.uniform(0.0, 1.0, size=sc.num_uds)]
        for _ in range(sc.num_uavs):
            parts.append(rng.uniform([-np.pi, 0.0],
                                     [np.pi, self.cfg.mobility.uav_v_max_mps]))
        return np.concatenate(parts)


class TrainedPolicy:
    """Greedy actors restored from a training checkpoint."""

    def __init__(self, cfg: ScenarioConfig, checkpoint: str,
                 strict: bool = True):
        trainer = MaddpgTrainer(cfg, seed=0)
        try:
            self.meta = trainer.load_checkpoint(checkpoint, strict=strict)
        except ValueError as exc:
            dims = [s.obs_dim for s in trainer.specs]
            raise ValueError(
                f"{exc}; this config expects per-agent observation dims "
                f"{dims}") from exc
        self._act = trainer.greedy_policy()

    def act(self, obs_list) -> np.ndarray:
        return self._act(obs_list)


def make_policy(name: str, cfg: ScenarioConfig, seed: int = 0,
                checkpoint: Optional[str] = None, strict: bool = True):
    """(policy object, association mode, allocation rule) for a name."""
    if name not in POLICY_MODES:
        raise ValueError(f"unknown policy {name!r}; choose from "
                         f"{sorted(POLICY_MODES)}")
    association, rule, needs_ckpt = POLICY_MODES[name]
    if needs_ckpt:
        if checkpoint is None:
            raise ValueError(f"policy {name!r} needs a trained checkpoint")
        policy = TrainedPolicy(cfg, checkpoint, strict=strict)
    else:
        policy = RandomPolicy(cfg, seed)
    return policy, association, rule
