"""Multi-agent actor-critic training over the slot environment.

One agent per UD and per UAV, in that order.  Every agent owns four
networks (online and target actor, online and target critic) and two
optimizers.  Critics are centralized: they score the concatenation of all
agents' observations and all agents' squashed actions, so training can
use global information while each deployed actor still acts on its own
observation alone.

Per environment step the critic of every agent takes one descent step on
the TD error against targets computed from the target networks; every
policy_delay-th step the actors ascend the critic value and the targets
track the online nets by Polyak averaging.  Exploration adds Gaussian
noise in the squashed action space, decaying per episode.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, List, Optional

import numpy as np

from .config import ScenarioConfig, config_hash
from .env import SaginMecEnv, action_bounds, observation_dims
from .nets import Actor, Adam, Critic, copy_params, soft_update
from .replay import ReplayBuffer
from .rng import generator_state, restore_generator, substream

CHECKPOINT_VERSION = 1


@dataclass
class AgentSpec:
    obs_dim: int
    act_dim: int
    act_lo: np.ndarray
    act_hi: np.ndarray


def agent_specs(cfg: ScenarioConfig) -> List[AgentSpec]:
    dims = observation_dims(cfg)
    specs = []
    for m, obs_dim in enumerate(dims):
        lo, hi = action_bounds(cfg, m)
        specs.append(AgentSpec(obs_dim, len(lo), lo, hi))
    return specs


class MaddpgAgent:
    """Nets and optimizers of one agent."""

    def __init__(self, spec: AgentSpec, joint_in_dim: int, hidden,
                 rng: np.random.Generator, actor_lr: float,
                 critic_lr: float):
        self.spec = spec
        self.actor = Actor(spec.obs_dim, spec.act_lo, spec.act_hi, hidden,
                           rng)
        self.actor_target = Actor(spec.obs_dim, spec.act_lo, spec.act_hi,
                                  hidden, rng)
        copy_params(self.actor.params, self.actor_target.params)
        self.critic = Critic(joint_in_dim, hidden, rng)
        self.critic_target = Critic(joint_in_dim, hidden, rng)
        copy_params(self.critic.params, self.critic_target.params)
        self.actor_opt = Adam(self.actor.params, actor_lr)
        self.critic_opt = Adam(self.critic.params, critic_lr)


class MaddpgTrainer:
    """Owns the env, the agents, the buffer, and the training loop."""

    def __init__(self, cfg: ScenarioConfig, seed: int,
                 env: Optional[SaginMecEnv] = None):
        self.cfg = cfg
        self.seed = int(seed)
        self.env = env if env is not None else SaginMecEnv(cfg, seed)
        self.specs = agent_specs(cfg)
        self.obs_dims = [s.obs_dim for s in self.specs]
        self.act_dims = [s.act_dim for s in self.specs]
        self.obs_total = int(sum(self.obs_dims))
        self.act_total = int(sum(self.act_dims))
        joint_in = self.obs_total + self.act_total
        hidden = tuple(cfg.rl.hidden_sizes)
        self.agents = [
            MaddpgAgent(spec, joint_in, hidden,
                        substream(seed, "nets", m), cfg.rl.actor_lr,
                        cfg.rl.critic_lr)
            for m, spec in enumerate(self.specs)
        ]
        self.buffer = ReplayBuffer(cfg.rl.buffer_size,
                                   substream(seed, "replay"))
        self._noise_rng = substream(seed, "noise")
        self.step_count = 0
        self.episodes_trained = 0
        off = np.cumsum([0, *self.obs_dims])
        self.obs_slices = [slice(int(a), int(b))
                           for a, b in zip(off[:-1], off[1:])]
        off = np.cumsum([0, *self.act_dims])
        self.act_slices = [slice(int(a), int(b))
                           for a, b in zip(off[:-1], off[1:])]

    # --- acting -------------------------------------------------------

    def select_actions(self, obs_list, noise_scale: float):
        """(u_flat, env_flat): squashed actions with exploration noise,
        and their environment-space images."""
        u_parts = []
        env_parts = []
        for m, agent in enumerate(self.agents):
            u, _ = agent.actor.forward_u(obs_list[m])
            u = u[0]
            if noise_scale > 0.0:
                u = u + noise_scale * self._noise_rng.normal(size=u.shape)
            u = np.clip(u, -1.0, 1.0)
            u_parts.append(u)
            env_parts.append(agent.actor.to_env(u))
        return np.concatenate(u_parts), np.concatenate(env_parts)

    def greedy_policy(self):
        """Noise-free policy closure for evaluation runs."""
        agents = self.agents

        def act(obs_list):
            parts = []
            for agent, obs in zip(agents, obs_list):
                u, _ = agent.actor.forward_u(obs)
                parts.append(agent.actor.to_env(u)[0])
            return np.concatenate(parts)

        return act

    # --- updates ------------------------------------------------------

    def _target_joint_u(self, next_obs: np.ndarray) -> np.ndarray:
        parts = []
        for m, agent in enumerate(self.agents):
            u, _ = agent.actor_target.forward_u(next_obs[:, self.obs_slices[m]])
            parts.append(u)
        return np.concatenate(parts, axis=1)

    def update_critic(self, m: int, batch, gamma: float):
        """One TD step for agent m's critic; returns the batch loss."""
        if batch is None:
            return None
        obs, act, rewards, next_obs, done = batch
        agent = self.agents[m]
        next_u = self._target_joint_u(next_obs)
        q_next, _ = agent.critic_target.forward(
            np.concatenate([next_obs, next_u], axis=1))
        y = rewards[:, m:m + 1] + gamma * (1.0 - done[:, None]) * q_next
        q, cache = agent.critic.forward(np.concatenate([obs, act], axis=1))
        err = q - y
        loss = float(np.mean(err ** 2))
        grads, _ = agent.critic.backward(cache, 2.0 * err / len(err))
        agent.critic_opt.step(agent.critic.params, grads)
        return loss

    def update_actor(self, m: int, batch,
                     dq_da_fn: Optional[Callable] = None):
        """Ascend agent m's expected critic value; returns the estimate.

        dq_da_fn replaces the critic's action gradient (it receives the
        (batch, act_dim) squashed actions and returns their gradient),
        which lets tests drive the actor against a known objective.
        """
        if batch is None:
            return None
        obs, act, _, _, _ = batch
        agent = self.agents[m]
        obs_m = obs[:, self.obs_slices[m]]
        u_m, cache = agent.actor.forward_u(obs_m)
        if dq_da_fn is None:
            joint = act.copy()
            joint[:, self.act_slices[m]] = u_m
            x = np.concatenate([obs, joint], axis=1)
            q, ccache = agent.critic.forward(x)
            objective = float(np.mean(q))
            _, dx = agent.critic.backward(ccache,
                                          np.ones_like(q) / len(q))
            a_start = self.obs_total + self.act_slices[m].start
            a_stop = self.obs_total + self.act_slices[m].stop
            da = dx[:, a_start:a_stop]
        else:
            da = np.asarray(dq_da_fn(u_m), dtype=float) / len(u_m)
            objective = None
        grads = agent.actor.backward_u(cache, -da)
        agent.actor_opt.step(agent.actor.params, grads)
        return objective

    def soft_update_targets(self) -> None:
        rate = self.cfg.rl.target_rate
        for agent in self.agents:
            soft_update(agent.actor.params, agent.actor_target.params, rate)
            soft_update(agent.critic.params, agent.critic_target.params,
                        rate)

    # --- the loop -----------------------------------------------------

    def _sample(self):
        if len(self.buffer) < self.cfg.rl.batch_size:
            return None
        return self.buffer.sample(self.cfg.rl.batch_size)

    def train(self, episodes: int, csv_path: Optional[str] = None):
        """Run the loop; returns curve rows
        [episode, per-agent reward sums..., system cost, violations]."""
        cfg = self.cfg
        rl = cfg.rl
        num_agents = len(self.agents)
        rows = []
        for ep_at in range(episodes):
            ep = self.episodes_trained
            noise = rl.noise_scale * rl.noise_decay ** ep
            obs = self.env.reset(ep)
            ep_rewards = np.zeros(num_agents)
            ep_cost = 0.0
            ep_viol = 0
            terminal = False
            while not terminal:
                u_flat, env_flat = self.select_actions(obs, noise)
                obs_flat = np.concatenate(obs)
                obs, rewards, outcome, terminal = self.env.step(env_flat)
                self.buffer.push(obs_flat, u_flat, rewards,
                                 np.concatenate(obs), float(terminal))
                ep_rewards += rewards
                ep_cost += outcome.cost
                ep_viol += int(outcome.deadline_violated.sum())
                batch = self._sample()
                if batch is not None:
                    for m in range(num_agents):
                        self.update_critic(m, batch, rl.gamma)
                    if self.step_count % rl.policy_delay == 0:
                        for m in range(num_agents):
                            self.update_actor(m, batch)
                        self.soft_update_targets()
                self.step_count += 1
            rows.append([float(ep), *ep_rewards.tolist(), ep_cost,
                         float(ep_viol)])
            self.episodes_trained += 1
        curve = np.asarray(rows) if rows else np.zeros((0, num_agents + 3))
        if csv_path is not None:
            write_curve(csv_path, curve, self.cfg)
        return curve

    # --- persistence --------------------------------------------------

    def save_checkpoint(self, path: str) -> None:
        arrays = {}
        for m, agent in enumerate(self.agents):
            for tag, net in (("actor", agent.actor.net),
                             ("actor_t", agent.actor_target.net),
                             ("critic", agent.critic.net),
                             ("critic_t", agent.critic_target.net)):
                for k, v in net.state().items():
                    arrays[f"a{m}_{tag}_{k}"] = v
            for tag, opt in (("aopt", agent.actor_opt),
                             ("copt", agent.critic_opt)):
                for k, v in opt.state().items():
                    arrays[f"a{m}_{tag}_{k}"] = v
        # Buffer contents ride along so training resumes exactly from an
        # episode boundary, not just with the same weights.
        for k, v in self.buffer.state().items():
            arrays[f"buf_{k}"] = np.asarray(v)
        meta = {
            "version": CHECKPOINT_VERSION,
            "config_hash": config_hash(self.cfg),
            "seed": self.seed,
            "episodes_trained": self.episodes_trained,
            "step_count": self.step_count,
            "cost_ref": self.cfg.cost_ref(),
            "rng": {
                "replay": generator_state(self.buffer._rng),
                "noise": generator_state(self._noise_rng),
            },
        }
        np.savez(path, _meta=np.asarray(json.dumps(meta)), **arrays)

    def load_checkpoint(self, path: str, strict: bool = True) -> dict:
        """Restore params, optimizer and RNG states; returns the metadata.

        strict insists the checkpoint was written for this exact config.
        """
        data = np.load(path, allow_pickle=False)
        meta = json.loads(str(data["_meta"]))
        if meta["version"] != CHECKPOINT_VERSION:
            raise ValueError(f"unsupported checkpoint version "
                             f"{meta['version']}")
        if strict and meta["config_hash"] != config_hash(self.cfg):
            raise ValueError("checkpoint belongs to a different config "
                             f"({meta['config_hash']})")
        for m, agent in enumerate(self.agents):
            for tag, net in (("actor", agent.actor.net),
                             ("actor_t", agent.actor_target.net),
                             ("critic", agent.critic.net),
                             ("critic_t", agent.critic_target.net)):
                net.load_state({k: data[f"a{m}_{tag}_{k}"]
                                for k in net.state()})
            for tag, opt in (("aopt", agent.actor_opt),
                             ("copt", agent.critic_opt)):
                opt.load_state({k: data[f"a{m}_{tag}_{k}"]
                                for k in opt.state()})
        buf_state = {k[len("buf_"):]: data[k] for k in data.files
                     if k.startswith("buf_")}
        if buf_state:
            self.buffer.load_state(buf_state)
        self.buffer._rng = restore_generator(meta["rng"]["replay"])
        self._noise_rng = restore_generator(meta["rng"]["noise"])
        self.episodes_trained = int(meta["episodes_trained"])
        self.step_count = int(meta["step_count"])
        return meta


def write_curve(path: str, curve: np.ndarray, cfg: ScenarioConfig) -> None:
    """Learning curve CSV; the header discloses the reward normalizer."""
    num_agents = cfg.scenario.num_uds + cfg.scenario.num_uavs
    cols = ["episode"] + [f"reward_agent_{m}" for m in range(num_agents)] \
        + ["system_cost", "deadline_violations"]
    lines = [f"# cost_ref={cfg.cost_ref()!r}", ",".join(cols)]
    for row in curve:
        lines.append(",".join(repr(float(v)) for v in row))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_curve(path: str):
    """(curve array, cost_ref) back from write_curve's format."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    cost_ref = float(lines[0].split("=", 1)[1])
    rows = [[float(v) for v in ln.split(",")] for ln in lines[2:]]
    return np.asarray(rows), cost_ref
