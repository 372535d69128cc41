"""A short training run on a pocket-sized scenario.

Three UDs, one UAV, one satellite, 25-slot episodes.  Watch the per
episode system cost fall as the UD actors learn to keep work local when
their only uplink is the thin satellite pipe.  A few minutes of CPU.

Usage: python demos/train_small.py [episodes]
"""
import sys

import numpy as np

from saginmec.config import default_config
from saginmec.maddpg import MaddpgTrainer

episodes = int(sys.argv[1]) if len(sys.argv) > 1 else 120

cfg = default_config()
cfg.scenario.num_uds = 3
cfg.scenario.num_uavs = 1
cfg.scenario.num_sats = 1
cfg.scenario.horizon_slots = 25

trainer = MaddpgTrainer(cfg, seed=7)
print(f"{trainer.env.num_agents} agents "
      f"({cfg.scenario.num_uds} UDs + {cfg.scenario.num_uavs} UAV), "
      f"{episodes} episodes x {cfg.scenario.horizon_slots} slots")

block = max(1, episodes // 10)
for start in range(0, episodes, block):
    chunk = trainer.train(min(block, episodes - start))
    costs = chunk[:, -2]
    rewards = chunk[:, 1:1 + trainer.env.num_agents].sum(axis=1)
    print(f"episodes {start:4d}-{start + len(chunk) - 1:4d}  "
          f"cost {np.mean(costs):12.4e}  "
          f"system reward {np.mean(rewards):12.4e}  "
          f"violations/ep {np.mean(chunk[:, -1]):5.2f}")

print("\nGreedy offload ratios after training (fresh episode):")
obs = trainer.env.reset(episodes + 1)
action = trainer.greedy_policy()(obs)
print(f"  lambda = {np.round(action[:cfg.scenario.num_uds], 3)}")
print(f"  UAV heading {action[-2]:+.2f} rad, speed {action[-1]:.2f} m/s")
