"""Trainer mechanics: updates against known objectives, determinism,
checkpoint resume."""
import numpy as np
import pytest

from saginmec.config import default_config
from saginmec.maddpg import MaddpgTrainer, read_curve, write_curve
from saginmec.nets import flatten_params


def small_cfg(num_uds=2, num_uavs=1, num_sats=1, horizon=4):
    cfg = default_config()
    cfg.scenario.num_uds = num_uds
    cfg.scenario.num_uavs = num_uavs
    cfg.scenario.num_sats = num_sats
    cfg.scenario.horizon_slots = horizon
    cfg.game.coverage_radius_m = 800.0
    cfg.rl.batch_size = 8
    cfg.rl.buffer_size = 512
    cfg.rl.hidden_sizes = [16, 16]
    return cfg


def synthetic_batch(trainer, batch=8, reward=0.0, done=0.0, rng=None):
    obs = np.zeros((batch, trainer.obs_total))
    act = np.zeros((batch, trainer.act_total))
    if rng is not None:
        obs = rng.normal(size=obs.shape)
        act = rng.uniform(-1.0, 1.0, size=act.shape)
    rewards = np.full((batch, len(trainer.agents)), float(reward))
    return (obs, act, rewards, obs.copy(), np.full(batch, float(done)))


def test_actor_ascends_supplied_gradient_to_known_optimum():
    # Q(u) = -(u - 0.4)^2 peaks at u = 0.4, i.e. 0.7 after the affine
    # map onto the [0, 1] offload range.
    cfg = small_cfg()
    cfg.rl.actor_lr = 5e-3
    trainer = MaddpgTrainer(cfg, seed=3)
    batch = synthetic_batch(trainer)

    def dq_du(u):
        return -2.0 * (u - 0.4)

    for _ in range(600):
        trainer.update_actor(0, batch, dq_da_fn=dq_du)
    env_action = trainer.agents[0].actor.act(np.zeros(5))
    assert abs(float(env_action[0]) - 0.7) <= 0.01


def test_critic_overfits_single_transition():
    cfg = small_cfg()
    cfg.rl.critic_lr = 5e-3
    trainer = MaddpgTrainer(cfg, seed=4)
    rng = np.random.default_rng(0)
    row = synthetic_batch(trainer, batch=1, reward=1.5, done=1.0, rng=rng)
    batch = tuple(np.repeat(a, 4, axis=0) for a in row)
    loss = None
    for _ in range(3000):
        loss = trainer.update_critic(0, batch, cfg.rl.gamma)
        if loss < 1e-3:
            break
    assert loss < 1e-3


def test_zero_discount_regresses_on_reward_alone():
    cfg = small_cfg()
    trainer = MaddpgTrainer(cfg, seed=5)
    for p in trainer.agents[0].critic.params:
        p.fill(0.0)
    batch = synthetic_batch(trainer, batch=4, rng=np.random.default_rng(1))
    r0 = np.array([0.5, -1.0, 2.0, 0.25])
    batch[2][:, 0] = r0
    # q == 0 everywhere, done == 0: the returned loss is mean(y^2), so
    # y == r exactly iff the loss equals mean(r^2).
    loss = trainer.update_critic(0, batch, gamma=0.0)
    assert loss == pytest.approx(np.mean(r0 ** 2), rel=1e-12)


def test_update_skips_on_missing_batch():
    cfg = small_cfg()
    trainer = MaddpgTrainer(cfg, seed=6)
    before = flatten_params(trainer.agents[0].critic.params).copy()
    assert trainer.update_critic(0, None, cfg.rl.gamma) is None
    assert trainer.update_actor(0, None) is None
    assert np.array_equal(
        flatten_params(trainer.agents[0].critic.params), before)


def test_same_seed_runs_are_identical():
    cfg = small_cfg()
    c1 = MaddpgTrainer(cfg, seed=11).train(3)
    t2 = MaddpgTrainer(cfg, seed=11)
    c2 = t2.train(3)
    assert np.array_equal(c1, c2)
    t3 = MaddpgTrainer(cfg, seed=11)
    t3.train(3)
    for a, b in zip(t2.agents, t3.agents):
        assert np.array_equal(flatten_params(a.actor.params),
                              flatten_params(b.actor.params))
        assert np.array_equal(flatten_params(a.critic.params),
                              flatten_params(b.critic.params))


def test_exploration_respects_action_bounds():
    cfg = small_cfg()
    trainer = MaddpgTrainer(cfg, seed=12)
    obs = trainer.env.reset(0)
    v_max = cfg.mobility.uav_v_max_mps
    for _ in range(50):
        u, env_act = trainer.select_actions(obs, noise_scale=5.0)
        assert np.all(np.abs(u) <= 1.0)
        lam = env_act[:cfg.scenario.num_uds]
        assert np.all((lam >= 0.0) & (lam <= 1.0))
        heading, speed = env_act[cfg.scenario.num_uds:]
        assert -np.pi <= heading <= np.pi
        assert 0.0 <= speed <= v_max


def test_curve_shape_and_zero_episode_run():
    cfg = small_cfg()
    trainer = MaddpgTrainer(cfg, seed=13)
    empty = trainer.train(0)
    assert empty.shape == (0, trainer.env.num_agents + 3)
    assert trainer.episodes_trained == 0
    curve = trainer.train(2)
    assert curve.shape == (2, trainer.env.num_agents + 3)
    assert np.array_equal(curve[:, 0], [0.0, 1.0])
    assert np.all(curve[:, -1] >= 0.0)


def test_checkpoint_resume_matches_uninterrupted_run(tmp_path):
    cfg = small_cfg()
    full = MaddpgTrainer(cfg, seed=5).train(4)

    t_head = MaddpgTrainer(cfg, seed=5)
    head = t_head.train(2)
    path = tmp_path / "ckpt.npz"
    t_head.save_checkpoint(str(path))

    t_tail = MaddpgTrainer(cfg, seed=5)
    meta = t_tail.load_checkpoint(str(path))
    assert meta["episodes_trained"] == 2
    assert t_tail.episodes_trained == 2
    tail = t_tail.train(2)
    assert np.array_equal(np.vstack([head, tail]), full)


def test_checkpoint_restores_every_net_and_counter(tmp_path):
    cfg = small_cfg()
    t1 = MaddpgTrainer(cfg, seed=21)
    t1.train(2)
    path = tmp_path / "ckpt.npz"
    t1.save_checkpoint(str(path))
    t2 = MaddpgTrainer(cfg, seed=99)
    t2.load_checkpoint(str(path))
    assert t2.step_count == t1.step_count
    assert len(t2.buffer) == len(t1.buffer)
    for a, b in zip(t1.agents, t2.agents):
        assert np.array_equal(flatten_params(a.actor.params),
                              flatten_params(b.actor.params))
        assert np.array_equal(flatten_params(a.actor_target.params),
                              flatten_params(b.actor_target.params))
        assert np.array_equal(flatten_params(a.critic.params),
                              flatten_params(b.critic.params))
        assert np.array_equal(flatten_params(a.critic_target.params),
                              flatten_params(b.critic_target.params))


def test_checkpoint_rejects_other_config(tmp_path):
    cfg = small_cfg()
    t1 = MaddpgTrainer(cfg, seed=7)
    path = tmp_path / "ckpt.npz"
    t1.save_checkpoint(str(path))
    other = small_cfg()
    other.rl.noise_scale = 0.2
    t2 = MaddpgTrainer(other, seed=7)
    with pytest.raises(ValueError, match="different config"):
        t2.load_checkpoint(str(path))
    t2.load_checkpoint(str(path), strict=False)


def test_target_nets_track_online_at_polyak_rate():
    cfg = small_cfg()
    trainer = MaddpgTrainer(cfg, seed=8)
    agent = trainer.agents[0]
    for p in agent.actor.params:
        p.fill(1.0)
    for p in agent.actor_target.params:
        p.fill(0.0)
    trainer.soft_update_targets()
    rate = cfg.rl.target_rate
    for p in agent.actor_target.params:
        assert np.allclose(p, rate, rtol=0.0, atol=1e-15)
    for p in agent.actor.params:
        assert np.all(p == 1.0)


def test_curve_file_roundtrip(tmp_path):
    cfg = small_cfg()
    trainer = MaddpgTrainer(cfg, seed=9)
    curve = trainer.train(2)
    path = tmp_path / "curve.csv"
    write_curve(str(path), curve, cfg)
    text = path.read_text()
    assert text.startswith("# cost_ref=")
    loaded, cost_ref = read_curve(str(path))
    assert cost_ref == cfg.cost_ref()
    assert np.array_equal(loaded, curve)
