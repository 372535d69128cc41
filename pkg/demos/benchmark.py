"""Head-to-head: the full stack against its two ablations.

Trains a small checkpoint if none is cached, then plays paired seeds
under maddpg-cocg (game association + square-root split), ecra (equal
split), and no (nearest-server association), plus the random policy as
a floor.  Medians over seeds follow the expected ordering.

The arena is a 200 m square so the lone UAV covers every ground point;
slot counts appear in the table because an episode ends early when the
UAV battery dies, which the random policy manages within ten slots.

Usage: python demos/benchmark.py [checkpoint.npz]
"""
import os
import sys

import numpy as np

from saginmec.config import default_config
from saginmec.harness import run_episode
from saginmec.maddpg import MaddpgTrainer


def desk_cfg():
    cfg = default_config()
    cfg.scenario.num_uds = 3
    cfg.scenario.num_uavs = 1
    cfg.scenario.num_sats = 1
    cfg.scenario.horizon_slots = 50
    cfg.scenario.area_x_max_m = 200.0
    cfg.scenario.area_y_max_m = 200.0
    cfg.scenario.uav_spawn_boxes_m = [[75.0, 125.0, 75.0, 125.0]]
    return cfg


cfg = desk_cfg()
ckpt = sys.argv[1] if len(sys.argv) > 1 else \
    os.path.join(os.path.dirname(__file__), "benchmark_ckpt.npz")
if not os.path.exists(ckpt):
    print(f"no checkpoint at {ckpt}; training 300 episodes (a few "
          "minutes)...")
    trainer = MaddpgTrainer(cfg, seed=7)
    trainer.train(300)
    trainer.save_checkpoint(ckpt)
    print(f"saved {ckpt}\n")

seeds = [101, 102, 103, 104, 105]
print(f"aggregated UD cost (slots survived) per episode, seeds {seeds}:")
medians = {}
for policy in ("maddpg-cocg", "ecra", "no", "random"):
    needs = None if policy == "random" else ckpt
    reports = [run_episode(cfg, policy=policy, seed=s, checkpoint=needs)
               for s in seeds]
    costs = [r.aggregated_ud_cost for r in reports]
    medians[policy] = float(np.median(costs))
    shown = "  ".join(f"{r.aggregated_ud_cost:9.3e} ({r.num_slots:2d})"
                      for r in reports)
    print(f"  {policy:12s} {shown}   median {medians[policy]:9.3e}")

print("\nordering against the ablations:")
for rival in ("ecra", "no"):
    ok = medians["maddpg-cocg"] <= medians[rival]
    print(f"  maddpg-cocg <= {rival:5s}: {ok} "
          f"({medians['maddpg-cocg']:.4e} vs {medians[rival]:.4e})")
print("\nthe random rows total fewer slots, so their sums are not "
      "comparable\nto the full-length runs; the per-slot picture:")
for policy in ("maddpg-cocg", "random"):
    needs = None if policy == "random" else ckpt
    reports = [run_episode(cfg, policy=policy, seed=s, checkpoint=needs)
               for s in seeds]
    per_slot = [r.aggregated_ud_cost / r.num_slots for r in reports]
    print(f"  {policy:12s} median cost per slot "
          f"{float(np.median(per_slot)):.3f}")
