"""End-to-end acceptance gate.

Each test prints one PASS/FAIL line for its criterion.  Run with -s to
see the lines on a green run; on a failure pytest shows the captured
line next to the assertion.

Criteria 6-8 share one trained desk checkpoint built by a session
fixture, so the file trains exactly once (a few minutes total).
"""
import time

import numpy as np
import pytest

from saginmec.allocation import (allocate_computing, allocation_objective,
                                 equal_allocate)
from saginmec.cli import main as cli_main
from saginmec.config import default_config, save_config
from saginmec.harness import run_episode
from saginmec.maddpg import MaddpgTrainer
from saginmec.rng import substream
from saginmec.verification import (check_allocation, check_channel,
                                   check_game, check_gradients,
                                   check_propulsion)

EVAL_SEEDS = [101, 102, 103, 104, 105]


def desk_config():
    """Smallest scenario where every decision layer still matters.

    The 200 m square keeps every UD inside the lone UAV's 300 m
    coverage disc wherever both wander (max separation in the box is
    about 283 m), so the satellite stays what the model means it to
    be: a relay of last resort, not a cost sink the baselines dodge.
    """
    cfg = default_config()
    cfg.scenario.num_uds = 3
    cfg.scenario.num_uavs = 1
    cfg.scenario.num_sats = 1
    cfg.scenario.horizon_slots = 50
    cfg.scenario.area_x_max_m = 200.0
    cfg.scenario.area_y_max_m = 200.0
    cfg.scenario.uav_spawn_boxes_m = [[75.0, 125.0, 75.0, 125.0]]
    return cfg


@pytest.fixture(scope="session")
def desk_checkpoint(tmp_path_factory):
    # one training run feeds criteria 6, 7 and 8
    cfg = desk_config()
    start = time.perf_counter()
    trainer = MaddpgTrainer(cfg, seed=7)
    curve = trainer.train(300)
    elapsed = time.perf_counter() - start
    path = tmp_path_factory.mktemp("ckpt") / "desk.npz"
    trainer.save_checkpoint(path)
    return {"cfg": cfg, "path": str(path), "curve": curve,
            "elapsed_s": elapsed, "num_agents": trainer.env.num_agents}


def _emit(result):
    print(result.line())
    assert result.ok, result.detail


def test_criterion_1_closed_form_allocation():
    res = check_allocation()
    _emit(res)
    assert res.data["elapsed_s"] < 60.0


def test_criterion_2_coalition_stability():
    res = check_game()
    _emit(res)
    assert res.data["elapsed_s"] < 60.0


def test_criterion_3_propulsion_shape():
    _emit(check_propulsion())


def test_criterion_4_channel_sanity():
    _emit(check_channel())


def test_criterion_5_gradient_correctness():
    _emit(check_gradients())


def test_criterion_6_training_smoke(desk_checkpoint):
    curve = desk_checkpoint["curve"]
    num_agents = desk_checkpoint["num_agents"]
    rewards = curve[:, 1:1 + num_agents].sum(axis=1)
    first = float(np.mean(rewards[:30]))
    last = float(np.mean(rewards[-30:]))
    elapsed = desk_checkpoint["elapsed_s"]
    ok = last > first and elapsed < 900.0
    print(f"{'PASS' if ok else 'FAIL'} training-smoke: system reward mean "
          f"first30={first:.3e} last30={last:.3e}, {elapsed:.0f}s "
          f"for 300 episodes")
    assert last > first
    assert elapsed < 900.0


def test_criterion_7_baseline_ordering(desk_checkpoint):
    cfg = desk_checkpoint["cfg"]
    ckpt = desk_checkpoint["path"]
    I, U = cfg.scenario.num_uds, cfg.scenario.num_uavs
    medians = {}
    ecra_reports = []
    for policy in ("maddpg-cocg", "ecra", "no"):
        per_seed = []
        for seed in EVAL_SEEDS:
            rep = run_episode(cfg, policy=policy, seed=seed, checkpoint=ckpt,
                              with_trace=(policy == "ecra"))
            per_seed.append(rep.aggregated_ud_cost)
            if policy == "ecra":
                ecra_reports.append(rep)
        medians[policy] = float(np.median(per_seed))

    # equal split can never undercut the closed form's objective
    audited = 0
    dominance = True
    f_max = cfg.compute.uav_f_max_hz
    for rep in ecra_reports:
        for rec in rep.trace:
            lam = rec["offload_ratio"]
            bits = rec["task_bits"]
            cpb = rec["task_cycles_per_bit"]
            for u in range(U):
                works = np.asarray([lam[i] * bits[i] * cpb[i]
                                    for i in range(I)
                                    if rec["assignment"][i] == u
                                    and lam[i] > 0.0])
                if works.size == 0:
                    continue
                audited += 1
                obj_eq = allocation_objective(works,
                                              equal_allocate(works, f_max))
                obj_cf = allocation_objective(works,
                                              allocate_computing(works, f_max))
                if obj_eq < obj_cf:
                    dominance = False

    ok = (medians["maddpg-cocg"] <= medians["ecra"]
          and medians["maddpg-cocg"] <= medians["no"]
          and dominance and audited > 0)
    print(f"{'PASS' if ok else 'FAIL'} baseline-ordering: median cost "
          f"maddpg-cocg={medians['maddpg-cocg']:.4e} "
          f"ecra={medians['ecra']:.4e} no={medians['no']:.4e}; "
          f"equal-split dominance held on {audited} slot instances")
    assert medians["maddpg-cocg"] <= medians["ecra"]
    assert medians["maddpg-cocg"] <= medians["no"]
    assert audited > 0 and dominance


def test_criterion_8_run_determinism(desk_checkpoint, tmp_path):
    cfg_path = tmp_path / "desk.json"
    save_config(desk_checkpoint["cfg"], str(cfg_path))
    outputs = []
    for k in (1, 2):
        report = tmp_path / f"report{k}.json"
        trace = tmp_path / f"trace{k}.jsonl"
        rc = cli_main(["run", "--config", str(cfg_path), "--seed", "7",
                       "--checkpoint", desk_checkpoint["path"],
                       "--report", str(report), "--trace", str(trace)])
        assert rc == 0
        outputs.append((report.read_bytes(), trace.read_bytes()))
    ok = outputs[0] == outputs[1]
    print(f"{'PASS' if ok else 'FAIL'} determinism: run --seed 7 twice, "
          f"byte-identical report and trace = {ok}")
    assert ok


def test_criterion_9_cost_recomposition():
    # random flying drains the battery in a handful of slots, so pool
    # several short episodes to get 20 distinct slot instances
    cfg = desk_config()
    w_t, w_e = cfg.cost.w_delay, cfg.cost.w_energy
    pool = []
    seed = 11
    while len(pool) < 20:
        rep = run_episode(cfg, policy="random", seed=seed, with_trace=True)
        pool.extend(rep.trace)
        seed += 1
    picks = substream(11, "audit").choice(len(pool), size=20, replace=False)
    worst = 0.0
    for k in picks:
        rec = pool[int(k)]
        rebuilt = sum(w_t * t + w_e * e
                      for t, e in zip(rec["t_total"], rec["e_total"]))
        worst = max(worst, abs(rebuilt - rec["cost"]))
    ok = worst <= 1.0e-9
    print(f"{'PASS' if ok else 'FAIL'} cost-recomposition: worst |dC(t)| "
          f"= {worst:.3e} over 20 random slots")
    assert ok
