"""UD-server association as a coalitional game.

Servers are indexed UAVs first, then satellites.  Each UD belongs to
exactly one server's coalition.  A UD's utility is the negative of its
offload cost: transmit energy plus the slower of its local and offloaded
completion times, with a flat penalty when the deadline is missed.  On a
UAV the members interact (equal bandwidth shares, compute split over the
coalition's cycle demands); on a satellite the members are independent.

The game repeatedly proposes randomized switch (two UDs trade coalitions)
and insert (one UD moves) operations and accepts an operation iff the
summed utility of the two touched coalitions does not drop.  Legal moves
for a UD are its nominee servers: UAVs whose coverage radius contains it,
plus every reachable satellite.  Acceptance with >= admits zero-delta
moves, so identical UDs could trade places forever; a zero-delta move runs
at most once per (UD, target) pair per sweep and does not count as
progress.  Convergence is declared after a sweep with no strict
improvement, confirmed by an exhaustive scan over single moves and trades;
the result is stable in the sense that no legal operation can raise the
touched coalitions' total utility.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .allocation import allocate_computing
from .channel import sample_rain_attenuation, ud_sat_rate, ud_uav_snr
from .computation import cloud_outcome, local_outcome
from .config import ScenarioConfig
from .constellation import CloudPath, Constellation, cloud_path
from .world import WorldState


@dataclass
class SlotLinks:
    """Per-slot channel state shared by the game and the outcome step.

    Drawn once per slot so the utilities the game optimizes are exactly
    the link conditions the executed slot experiences.
    """

    uav_snr: np.ndarray    # (I, U) bandwidth-free SNR per UD-UAV pair
    sat_rate: np.ndarray   # (I, N) bits/s
    sat_dist: np.ndarray   # (I, N) 3D distance m
    rain_db: np.ndarray    # (I,) one fade per UD per slot
    paths: list            # CloudPath | None per satellite
    reachable: np.ndarray  # (N,) bool


def build_slot_links(world: WorldState, cfg: ScenarioConfig,
                     con: Constellation, rng: Optional[np.random.Generator],
                     paths: Optional[list] = None) -> SlotLinks:
    """Evaluate every potential link at the slot's positions.

    Stream consumption order is fixed (rain, then Bernoulli LoS states if
    enabled) so replays stay aligned.  `paths` carries precomputed cloud
    routes; None computes them here.
    """
    sc = cfg.scenario
    I, U, N = sc.num_uds, sc.num_uavs, sc.num_sats

    if N > 0:
        if rng is None:
            raise ValueError("need an rng to draw rain fades")
        rain = sample_rain_attenuation(cfg.channel.rain_shape,
                                       cfg.channel.rain_scale_db, rng,
                                       size=I)
    else:
        rain = np.zeros(I)

    if U > 0:
        snr = ud_uav_snr(world.ud_pos[:, None, :], world.uav_pos[None, :, :],
                         sc.uav_alt_m, world.ud_tx_power_w[:, None],
                         cfg.channel, rng if cfg.channel.bernoulli_los else None)
    else:
        snr = np.zeros((I, 0))

    if N > 0:
        diff = world.ud_pos[:, None, :] - world.sat_pos[None, :, :]
        sat_dist = np.sqrt(np.sum(diff * diff, axis=-1)
                           + sc.sat_alt_m * sc.sat_alt_m)
        sat_rate = ud_sat_rate(world.ud_pos[:, None, :],
                               world.sat_pos[None, :, :], sc.sat_alt_m,
                               world.ud_tx_power_w[:, None], cfg.channel,
                               cfg.sat_noise_w(), rain_db=rain[:, None])
        if paths is None:
            paths = []
            for n in range(N):
                try:
                    paths.append(cloud_path(con, n))
                except ValueError:
                    paths.append(None)
        reachable = np.array([p is not None for p in paths])
        if not np.any(reachable):
            raise ValueError("cloud unreachable")
    else:
        sat_dist = np.zeros((I, 0))
        sat_rate = np.zeros((I, 0))
        paths = []
        reachable = np.zeros(0, dtype=bool)

    return SlotLinks(uav_snr=snr, sat_rate=sat_rate, sat_dist=sat_dist,
                     rain_db=rain, paths=paths, reachable=reachable)


@dataclass
class CoalitionContext:
    """Frozen inputs of one slot's association game."""

    num_uds: int
    num_uavs: int
    num_sats: int
    works: np.ndarray       # (I,) cycles offloaded
    off_bits: np.ndarray    # (I,)
    t_local: np.ndarray     # (I,)
    deadline: np.ndarray    # (I,)
    power_w: np.ndarray     # (I,)
    uav_snr: np.ndarray     # (I, U)
    coverage: np.ndarray    # (I, U) bool
    uav_dist: np.ndarray    # (I, U) horizontal m, for nearest-tie breaks
    sat_cost: np.ndarray    # (I, N) association cost, inf if unreachable
    sat_dist: np.ndarray    # (I, N)
    reachable: np.ndarray   # (N,) bool
    band_total: float
    uav_f_max: float
    w_delay: float
    w_energy: float
    deadline_penalty: float
    allocate_fn: Callable = allocate_computing

    @property
    def num_servers(self) -> int:
        return self.num_uavs + self.num_sats


def build_context(world: WorldState, offload_ratio, cfg: ScenarioConfig,
                  links: SlotLinks,
                  allocate_fn: Callable = allocate_computing
                  ) -> CoalitionContext:
    sc = cfg.scenario
    I, U, N = sc.num_uds, sc.num_uavs, sc.num_sats
    lam = np.clip(np.asarray(offload_ratio, dtype=float), 0.0, 1.0)

    bits = world.task_bits
    cpb = world.task_cycles_per_bit
    works = cpb * lam * bits
    off_bits = lam * bits
    t_local = np.array([
        local_outcome(bits[i], cpb[i], lam[i], cfg.compute.ud_f_hz,
                      cfg.compute.switched_capacitance)[0]
        for i in range(I)
    ])

    if U > 0:
        diff = world.ud_pos[:, None, :] - world.uav_pos[None, :, :]
        uav_dist = np.sqrt(np.sum(diff * diff, axis=-1))
        coverage = uav_dist <= cfg.game.coverage_radius_m
    else:
        uav_dist = np.zeros((I, 0))
        coverage = np.zeros((I, 0), dtype=bool)

    w_T, w_E = cfg.cost.w_delay, cfg.cost.w_energy
    r_d = cfg.rl.deadline_penalty
    sat_cost = np.full((I, N), np.inf)
    for n in range(N):
        if not links.reachable[n]:
            continue
        for i in range(I):
            t_off, e_tx = cloud_outcome(
                bits[i], lam[i], links.sat_rate[i, n], world.ud_tx_power_w[i],
                links.sat_dist[i, n], links.paths[n],
                cfg.cloud.isl_rate_bps, cfg.cloud.sat_ground_rate_bps)
            t_i = max(t_local[i], t_off)
            sat_cost[i, n] = w_T * t_i + w_E * e_tx \
                + (r_d if t_i > world.task_deadline_s[i] else 0.0)

    return CoalitionContext(
        num_uds=I, num_uavs=U, num_sats=N,
        works=works, off_bits=off_bits, t_local=t_local,
        deadline=world.task_deadline_s.copy(), power_w=world.ud_tx_power_w,
        uav_snr=links.uav_snr, coverage=coverage, uav_dist=uav_dist,
        sat_cost=sat_cost, sat_dist=links.sat_dist,
        reachable=links.reachable,
        band_total=cfg.channel.uav_band_total_hz,
        uav_f_max=cfg.compute.uav_f_max_hz,
        w_delay=w_T, w_energy=w_E, deadline_penalty=r_d,
        allocate_fn=allocate_fn,
    )


@dataclass
class CoalitionPartition:
    """Assignment of every UD to one server; a disjoint cover by design."""

    assignment: np.ndarray  # (I,) server index
    num_servers: int

    def members(self, server: int) -> np.ndarray:
        return np.nonzero(self.assignment == server)[0]

    def coalitions(self) -> dict:
        return {k: self.members(k).tolist() for k in range(self.num_servers)}

    def validate(self) -> None:
        if np.any(self.assignment < 0) \
                or np.any(self.assignment >= self.num_servers):
            raise ValueError("assignment out of server range")

    def copy(self) -> "CoalitionPartition":
        return CoalitionPartition(self.assignment.copy(), self.num_servers)


def uav_member_costs(ctx: CoalitionContext, u: int,
                     members: np.ndarray) -> np.ndarray:
    """Association costs of `members` if they form UAV u's coalition."""
    m = len(members)
    if m == 0:
        return np.zeros(0)
    w = ctx.works[members]
    f = ctx.allocate_fn(w, ctx.uav_f_max)
    rate = (ctx.band_total / m) * np.log2(1.0 + ctx.uav_snr[members, u])
    off = ctx.off_bits[members]
    active = off > 0
    t_off = np.zeros(m)
    t_off[active] = off[active] / rate[active] + w[active] / f[active]
    e_tx = ctx.power_w[members] * off / rate
    t_i = np.maximum(ctx.t_local[members], t_off)
    violated = t_i > ctx.deadline[members]
    return ctx.w_delay * t_i + ctx.w_energy * e_tx \
        + ctx.deadline_penalty * violated


def server_member_costs(ctx: CoalitionContext, server: int,
                        members: np.ndarray) -> np.ndarray:
    if server < ctx.num_uavs:
        return uav_member_costs(ctx, server, members)
    return ctx.sat_cost[members, server - ctx.num_uavs]


def coalition_utility(ctx: CoalitionContext, server: int,
                      members: np.ndarray) -> float:
    """Sum of member utilities; empty coalitions contribute zero."""
    return -float(np.sum(server_member_costs(ctx, server, members)))


def offload_cost(ctx: CoalitionContext, part: CoalitionPartition, i: int,
                 server: int) -> float:
    """Cost UD i would pay on `server` given the rest of the partition.

    For i's current server this is its realized cost; otherwise i is
    tentatively added to the server's present members and the bandwidth
    and compute shares are recomputed.
    """
    members = part.members(server)
    if part.assignment[i] != server:
        members = np.append(members, i)
    costs = server_member_costs(ctx, server, members)
    return float(costs[np.nonzero(members == i)[0][0]])


def nominee_servers(ctx: CoalitionContext, i: int) -> list:
    """Legal servers for UD i: covering UAVs plus reachable satellites."""
    out = [int(u) for u in np.nonzero(ctx.coverage[i])[0]]
    out.extend(ctx.num_uavs + int(n) for n in np.nonzero(ctx.reachable)[0])
    return out


def init_partition(ctx: CoalitionContext) -> CoalitionPartition:
    """Coverage-based start: the nearest covering UAV, else the nearest
    reachable satellite, else (no satellites configured) the nearest UAV."""
    assignment = np.zeros(ctx.num_uds, dtype=int)
    for i in range(ctx.num_uds):
        covered = np.nonzero(ctx.coverage[i])[0]
        if len(covered) > 0:
            assignment[i] = covered[np.argmin(ctx.uav_dist[i, covered])]
        elif np.any(ctx.reachable):
            reach = np.nonzero(ctx.reachable)[0]
            assignment[i] = ctx.num_uavs \
                + reach[np.argmin(ctx.sat_dist[i, reach])]
        elif ctx.num_uavs > 0:
            assignment[i] = int(np.argmin(ctx.uav_dist[i]))
        else:
            raise ValueError("cloud unreachable")
    return CoalitionPartition(assignment, ctx.num_servers)


def _pair_total(ctx, part, k_a, k_b) -> float:
    return coalition_utility(ctx, k_a, part.members(k_a)) \
        + coalition_utility(ctx, k_b, part.members(k_b))


def _op_tol(before: float, after: float) -> float:
    # strictness threshold scaled to the magnitudes actually compared
    return 1e-9 * (1.0 + abs(before) + abs(after))


def _insert_delta(ctx, part, i, target):
    """(utility change, tolerance) of the two touched coalitions if i
    moves to target."""
    source = int(part.assignment[i])
    before = _pair_total(ctx, part, source, target)
    part.assignment[i] = target
    after = _pair_total(ctx, part, source, target)
    part.assignment[i] = source
    return after - before, _op_tol(before, after)


def _switch_delta(ctx, part, i, j):
    """(utility change, tolerance) if i and j trade coalitions; None when
    the trade is not legal for either endpoint."""
    k_i = int(part.assignment[i])
    k_j = int(part.assignment[j])
    if k_j not in nominee_servers(ctx, i) or k_i not in nominee_servers(ctx, j):
        return None
    before = _pair_total(ctx, part, k_i, k_j)
    part.assignment[i] = k_j
    part.assignment[j] = k_i
    after = _pair_total(ctx, part, k_i, k_j)
    part.assignment[i] = k_i
    part.assignment[j] = k_j
    return after - before, _op_tol(before, after)


def try_switch(ctx: CoalitionContext, part: CoalitionPartition, i: int,
               j: int):
    """Exchange UDs i and j between their coalitions if the two touched
    coalitions' summed utility does not drop.  Returns (accepted,
    partition); the input partition is never mutated."""
    if part.assignment[i] == part.assignment[j]:
        raise ValueError("switch needs UDs from two different coalitions")
    res = _switch_delta(ctx, part, i, j)
    if res is None or res[0] < -res[1]:
        return False, part.copy()
    new = part.copy()
    new.assignment[i], new.assignment[j] = part.assignment[j], \
        part.assignment[i]
    return True, new


def try_insert(ctx: CoalitionContext, part: CoalitionPartition, i: int,
               target: int):
    """Move UD i into `target`'s coalition if the two touched coalitions'
    summed utility does not drop.  Returns (accepted, partition)."""
    if part.assignment[i] == target:
        raise ValueError("insert target is the current coalition")
    delta, tol = _insert_delta(ctx, part, i, target)
    if delta < -tol:
        return False, part.copy()
    new = part.copy()
    new.assignment[i] = target
    return True, new


@dataclass
class GameTraceEntry:
    sweep: int
    op: str          # "switch" | "insert"
    ud: int
    partner: int     # other UD for a switch, -1 otherwise
    source: int
    target: int
    delta: float
    accepted: bool
    total_utility: float


def total_utility(ctx: CoalitionContext, part: CoalitionPartition) -> float:
    return sum(coalition_utility(ctx, k, part.members(k))
               for k in range(ctx.num_servers))


def _find_strict_op(ctx, part):
    """Exhaustive scan for any acceptable strictly-improving operation."""
    for i in range(ctx.num_uds):
        k = int(part.assignment[i])
        for target in nominee_servers(ctx, i):
            if target == k:
                continue
            delta, tol = _insert_delta(ctx, part, i, target)
            if delta > tol:
                return ("insert", i, -1, k, target, (delta, tol))
            for j in part.members(target):
                res = _switch_delta(ctx, part, i, int(j))
                if res is not None and res[0] > res[1]:
                    return ("switch", i, int(j), k, target, res)
    return None


def run_game(ctx: CoalitionContext, rng: np.random.Generator,
             trace: Optional[list] = None,
             max_sweeps: Optional[int] = None) -> CoalitionPartition:
    """Randomized better-response dynamics to a stable partition.

    Raises RuntimeError when the sweep cap is exhausted (default 50 per
    UD), which a finite instance should never reach: strict improvements
    raise the total utility through finitely many partitions and
    zero-delta moves are rate-limited.
    """
    part = init_partition(ctx)
    if max_sweeps is None:
        max_sweeps = 50 * max(1, ctx.num_uds)
    return _run_game_loop(ctx, part, rng, max(1, max_sweeps), trace)


def _run_game_loop(ctx, part, rng, max_sweeps, trace):
    for sweep in range(max_sweeps):
        strict_change = False
        zero_seen = set()

        def consider(op, i, j, source, target, res):
            nonlocal strict_change
            accepted = False
            if res is not None:
                delta, tol = res
                if delta > tol:
                    accepted = True
                    strict_change = True
                elif delta >= -tol:
                    keys = [(i, target)] + ([(j, source)] if j >= 0 else [])
                    if all(key not in zero_seen for key in keys):
                        accepted = True
                        zero_seen.update(keys)
            if accepted:
                part.assignment[i] = target
                if j >= 0:
                    part.assignment[j] = source
            if trace is not None:
                trace.append(GameTraceEntry(
                    sweep=sweep, op=op, ud=i, partner=j, source=source,
                    target=target, delta=float("nan") if res is None
                    else res[0], accepted=accepted,
                    total_utility=total_utility(ctx, part)))
            return accepted

        for i in rng.permutation(ctx.num_uds):
            i = int(i)
            k = int(part.assignment[i])
            nominees = [s for s in nominee_servers(ctx, i) if s != k]
            if not nominees:
                continue
            target = nominees[int(rng.integers(len(nominees)))]
            others = part.members(target)
            swapped = False
            if len(others) > 0:
                j = int(others[int(rng.integers(len(others)))])
                swapped = consider("switch", i, j, k, target,
                                   _switch_delta(ctx, part, i, j))
            if not swapped:
                consider("insert", i, -1, k, target,
                         _insert_delta(ctx, part, i, target))

        if not strict_change:
            found = _find_strict_op(ctx, part)
            if found is None:
                part.validate()
                return part
            op, i, j, source, target, res = found
            consider(op, i, j, source, target, res)

    raise RuntimeError(
        f"coalition game did not converge within {max_sweeps} sweeps")


def run_coalition_game(world: WorldState, offload_ratio,
                       cfg: ScenarioConfig, rng: np.random.Generator,
                       links: Optional[SlotLinks] = None,
                       con: Optional[Constellation] = None,
                       trace: Optional[list] = None,
                       allocate_fn: Callable = allocate_computing,
                       max_sweeps: Optional[int] = None
                       ) -> CoalitionPartition:
    """Associate every UD for the slot: context + game in one call.

    Pass `links` to reuse channel state drawn elsewhere in the slot;
    otherwise it is drawn here from `rng`.
    """
    if links is None:
        if con is None:
            con = Constellation.from_config(cfg)
        links = build_slot_links(world, cfg, con, rng)
    ctx = build_context(world, offload_ratio, cfg, links, allocate_fn)
    if max_sweeps is None:
        max_sweeps = cfg.game.max_sweep_factor * cfg.scenario.num_uds
    return run_game(ctx, rng, trace, max_sweeps=max_sweeps)


def verify_nash_context(ctx: CoalitionContext, part: CoalitionPartition,
                        selfish: bool = False):
    """Check no UD has a profitable unilateral deviation left.

    Deviations range over the UD's nominee servers, the strategy space the
    game itself plays on.  By default a deviation counts as profitable
    when the preference relation the game plays by favors it: moving the
    UD would raise the summed utility of the two touched coalitions.  The
    game cannot terminate while such a move exists, so its output always
    verifies.  With selfish=True the check instead asks whether the UD's
    own cost would drop; congestion externalities mean a deviation can be
    individually profitable yet rejected by the acceptance rule, so a
    stable partition may fail the selfish check.  That mode is a
    diagnostic for measuring the gap, not a stability property the
    dynamics promise.

    Returns (True, None) or (False, witness); witness is a dict with the
    UD, the better server, its current and deviant cost, and the summed
    utility change of the deviation.
    """
    for i in range(ctx.num_uds):
        k = int(part.assignment[i])
        current = offload_cost(ctx, part, i, k)
        for target in nominee_servers(ctx, i):
            if target == k:
                continue
            alt = offload_cost(ctx, part, i, target)
            delta, tol = _insert_delta(ctx, part, i, target)
            better = (alt < current - _op_tol(current, alt)) if selfish \
                else (delta > tol)
            if better:
                return False, {"ud": i, "server": target,
                               "cost_now": current, "cost_alt": alt,
                               "pair_delta": delta}
    return True, None


def verify_nash(part: CoalitionPartition, world: WorldState, offload_ratio,
                cfg: ScenarioConfig, links: SlotLinks,
                allocate_fn: Callable = allocate_computing,
                selfish: bool = False):
    """verify_nash_context on a context rebuilt from slot state.

    `links` must be the same channel draw the partition was computed
    under, else the comparison is against different link conditions.
    """
    ctx = build_context(world, offload_ratio, cfg, links, allocate_fn)
    return verify_nash_context(ctx, part, selfish=selfish)
