"""Self-check probes behind the `verify` command.

Each check rebuilds an independent ground truth (a grid oracle, a
deviation enumeration, finite differences) and compares the production
path against it.  All draws come from named substreams of the given
seed, so failures reproduce exactly.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import List

import numpy as np

from .allocation import allocate_computing, allocation_objective, \
    oracle_allocate
from .channel import los_probability, ud_uav_rate
from .coalition import (build_context, build_slot_links, run_game,
                        verify_nash_context)
from .computation import propulsion_power
from .config import default_config
from .constellation import Constellation
from .nets import Actor, Critic, assign_params, flatten_params
from .rng import substream
from .world import init_world


@dataclass
class CheckResult:
    name: str
    ok: bool
    detail: str
    data: dict = field(default_factory=dict)

    def line(self) -> str:
        return f"{'PASS' if self.ok else 'FAIL'} {self.name}: {self.detail}"


def check_allocation(instances: int = 100, f_max: float = 3.0e9,
                     rel_tol: float = 1.0e-3, budget_tol: float = 1.0e-9,
                     seed: int = 0) -> CheckResult:
    """Closed-form split vs the grid-search oracle."""
    rng = substream(seed, "verify", "alloc")
    worst_rel = 0.0
    worst_budget = 0.0
    start = time.perf_counter()
    for _ in range(instances):
        works = rng.uniform(1.0e8, 1.0e10, size=int(rng.integers(2, 6)))
        closed = allocate_computing(works, f_max)
        worst_budget = max(worst_budget,
                           abs(float(np.sum(closed)) - f_max) / f_max)
        obj_closed = allocation_objective(works, closed)
        obj_oracle = allocation_objective(works,
                                          oracle_allocate(works, f_max))
        worst_rel = max(worst_rel,
                        abs(obj_closed - obj_oracle) / obj_oracle)
    elapsed = time.perf_counter() - start
    ok = worst_rel <= rel_tol and worst_budget <= budget_tol
    return CheckResult(
        "allocation-closed-form", ok,
        f"{instances} instances, max objective gap {worst_rel:.2e} "
        f"(tol {rel_tol:.0e}), max budget error {worst_budget:.2e} "
        f"(tol {budget_tol:.0e}), {elapsed:.1f}s",
        {"max_rel": worst_rel, "max_budget": worst_budget,
         "elapsed_s": elapsed})


def _desk_instance(seed: int, num_uds: int, num_uavs: int, num_sats: int):
    cfg = default_config()
    cfg.scenario.num_uds = num_uds
    cfg.scenario.num_uavs = num_uavs
    cfg.scenario.num_sats = num_sats
    cfg.game.coverage_radius_m = 800.0
    world = init_world(cfg, seed)
    con = Constellation.from_config(cfg)
    links = build_slot_links(world, cfg, con, substream(seed, "links"))
    lam = substream(seed, "lam").uniform(0.0, 1.0, size=num_uds)
    return cfg, build_context(world, lam, cfg, links)


def check_game(instances: int = 50, seed: int = 0) -> CheckResult:
    """Termination, stability, and monotone utility on desk instances."""
    rng = substream(seed, "verify", "game")
    failures = []
    max_sweep = 0
    start = time.perf_counter()
    for k in range(instances):
        num_uds = int(rng.integers(2, 7))
        num_uavs = int(rng.integers(1, 3))
        _, ctx = _desk_instance(7000 + k, num_uds, num_uavs, 1)
        trace = []
        try:
            part = run_game(ctx, substream(seed, "game", k), trace=trace)
        except RuntimeError as exc:
            failures.append((k, f"no convergence: {exc}"))
            continue
        max_sweep = max(max_sweep, trace[-1].sweep if trace else 0)
        ok, witness = verify_nash_context(ctx, part)
        if not ok:
            failures.append((k, f"unstable: {witness}"))
            continue
        last = None
        for entry in trace:
            if not entry.accepted:
                continue
            if last is not None and \
                    entry.total_utility < last - 1e-6 * (1 + abs(last)):
                failures.append((k, f"utility dropped at sweep "
                                 f"{entry.sweep}"))
                break
            last = entry.total_utility
    elapsed = time.perf_counter() - start
    return CheckResult(
        "coalition-stability", not failures,
        f"{instances} instances, {len(failures)} failures, deepest sweep "
        f"{max_sweep}, {elapsed:.1f}s",
        {"failures": failures, "max_sweep": max_sweep,
         "elapsed_s": elapsed})


def check_propulsion(tol: float = 1.0e-9) -> CheckResult:
    """Hover power closed form and the interior minimum of the curve."""
    deltas = (4.0, 2.0, 3.0, 1.0)
    tip = 120.0
    hover = propulsion_power(0.0, deltas, tip)
    expected = 4.0 + 2.0 * 3.0 ** 0.25
    hover_err = abs(hover - expected)
    speeds = np.linspace(0.0, 25.0, 2501)
    curve = np.array([propulsion_power(v, deltas, tip) for v in speeds])
    k = int(np.argmin(curve))
    interior = 0 < k < len(speeds) - 1 and curve[k] < hover
    ok = hover_err <= tol and interior
    return CheckResult(
        "propulsion-shape", ok,
        f"hover error {hover_err:.2e} (tol {tol:.0e}), minimum "
        f"{curve[k]:.6f} W at {speeds[k]:.3f} m/s vs hover {hover:.6f} W",
        {"hover_err": hover_err, "v_min": float(speeds[k]),
         "p_min": float(curve[k])})


def check_channel(geometries: int = 1000, seed: int = 0) -> CheckResult:
    """LoS/elevation and rate/distance monotonicity, band conservation."""
    ch = default_config().channel
    rng = substream(seed, "verify", "channel")
    los_bad = 0
    rate_bad = 0
    for _ in range(geometries):
        alt = rng.uniform(50.0, 300.0)
        d_near, d_far = np.sort(rng.uniform(1.0, 2000.0, size=2))
        p_near = los_probability([0.0, 0.0], [d_near, 0.0], alt,
                                 ch.los_e1, ch.los_e2)
        p_far = los_probability([0.0, 0.0], [d_far, 0.0], alt,
                                ch.los_e1, ch.los_e2)
        # nearer means higher elevation, so LoS must not drop
        if p_near < p_far:
            los_bad += 1
        power = rng.uniform(0.1, 0.3)
        r_near = ud_uav_rate([0.0, 0.0], [d_near, 0.0], alt, power, 1, ch)
        r_far = ud_uav_rate([0.0, 0.0], [d_far, 0.0], alt, power, 1, ch)
        if r_near < r_far:
            rate_bad += 1
    conserve_ok = True
    for m in range(1, 33):
        share = ch.uav_band_total_hz / m
        shares = np.full(m, share)
        if not np.all(shares == share):
            conserve_ok = False
        if sum([Fraction(1, m)] * m, Fraction(0)) != 1:
            conserve_ok = False
    ok = los_bad == 0 and rate_bad == 0 and conserve_ok
    return CheckResult(
        "channel-sanity", ok,
        f"{geometries} geometries, {los_bad} LoS order violations, "
        f"{rate_bad} rate order violations, equal-split conservation "
        f"{'exact' if conserve_ok else 'BROKEN'}",
        {"los_bad": los_bad, "rate_bad": rate_bad,
         "conserve_ok": conserve_ok})


def _directional_fd(params, eval_fn, direction, h=1.0e-6):
    theta = flatten_params(params).copy()
    assign_params(params, theta + h * direction)
    up = eval_fn()
    assign_params(params, theta - h * direction)
    down = eval_fn()
    assign_params(params, theta)
    return (up - down) / (2.0 * h)


def check_gradients(probes: int = 100, rel_tol: float = 1.0e-3,
                    seed: int = 0) -> CheckResult:
    """Analytic net gradients against central finite differences.

    Each probe draws a fresh net, input batch, and random direction in
    parameter space, then compares the directional derivative.
    """
    rng = substream(seed, "verify", "grad")
    worst = 0.0
    for p in range(probes):
        hidden = [int(rng.choice([16, 32, 64])) for _ in range(2)]
        batch = int(rng.integers(2, 6))
        if p % 2 == 0:
            in_dim = int(rng.integers(4, 13))
            net = Critic(in_dim, hidden, rng)
            x = rng.normal(size=(batch, in_dim))
            y = rng.normal(size=(batch, 1))

            def eval_fn():
                q, _ = net.forward(x)
                return float(np.mean((q - y) ** 2))
        else:
            obs_dim = int(rng.integers(3, 9))
            act_dim = int(rng.integers(1, 4))
            net = Actor(obs_dim, np.zeros(act_dim), np.ones(act_dim),
                        hidden, rng)
            x = rng.normal(size=(batch, obs_dim))

            def eval_fn():
                u, _ = net.forward_u(x)
                return float(np.mean(np.sum(u, axis=1)))

        # warm the nets away from the zero-init final layer
        jitter = rng.normal(scale=0.05, size=flatten_params(net.params).shape)
        assign_params(net.params, flatten_params(net.params) + jitter)
        if p % 2 == 0:
            q, cache = net.forward(x)
            grads, _ = net.backward(cache, 2.0 * (q - y) / batch)
        else:
            u, cache = net.forward_u(x)
            grads = net.backward_u(cache, np.ones_like(u) / batch)
        direction = rng.normal(size=flatten_params(net.params).shape)
        direction /= np.linalg.norm(direction)
        fd = _directional_fd(net.params, eval_fn, direction)
        analytic = float(np.dot(flatten_params(grads), direction))
        scale = max(abs(fd), abs(analytic), 1.0e-8)
        worst = max(worst, abs(fd - analytic) / scale)
    ok = worst <= rel_tol
    return CheckResult(
        "gradient-correctness", ok,
        f"{probes} probes, max relative error {worst:.2e} "
        f"(tol {rel_tol:.0e})",
        {"max_rel": worst})


def verify_all(seed: int = 0) -> List[CheckResult]:
    """The full probe suite at the benchmark sample sizes."""
    return [
        check_allocation(seed=seed),
        check_game(seed=seed),
        check_propulsion(),
        check_channel(seed=seed),
        check_gradients(seed=seed),
    ]
