"""One coalition formation game, move by move.

Five UDs, two UAVs, one satellite.  Starting from the coverage-based
partition, UDs switch and insert between coalitions whenever the move
does not lower the two affected coalitions' combined utility, until no
move helps.  The final partition leaves no UD with a profitable
unilateral deviation.
"""
import numpy as np

from saginmec.coalition import (build_context, build_slot_links,
                                init_partition, run_game, total_utility,
                                verify_nash_context)
from saginmec.config import default_config
from saginmec.constellation import Constellation
from saginmec.rng import substream
from saginmec.world import init_world

cfg = default_config()
cfg.scenario.num_uds = 5
cfg.scenario.num_uavs = 2
cfg.scenario.num_sats = 1
cfg.game.coverage_radius_m = 600.0

seed = 2033
world = init_world(cfg, seed)
con = Constellation.from_config(cfg)
links = build_slot_links(world, cfg, con, substream(seed, "links"))
ratios = substream(seed, "lam").uniform(0.3, 0.9, size=5)
ctx = build_context(world, ratios, cfg, links)

start = init_partition(ctx)
print("servers: 0-1 are UAVs, 2 is the satellite")
print(f"offload ratios: {np.round(ratios, 2)}")
print(f"initial assignment: {start.assignment.tolist()} "
      f"(utility {total_utility(ctx, start):.4f})")

trace = []
final = run_game(ctx, substream(seed, "game"), trace=trace)

print(f"\n{len(trace)} proposals over {trace[-1].sweep + 1} sweep(s):")
for e in trace:
    verdict = "accept" if e.accepted else "reject"
    if e.op == "switch":
        move = f"UD {e.ud} <-> UD {e.partner}"
    else:
        move = f"UD {e.ud}: server {e.source} -> {e.target}"
    delta = "   illegal " if np.isnan(e.delta) else f"{e.delta:+.4e}"
    print(f"  sweep {e.sweep} {e.op:6s} {move:28s} "
          f"delta {delta}  {verdict}  "
          f"total {e.total_utility:.4f}")

print(f"\nfinal assignment: {final.assignment.tolist()} "
      f"(utility {total_utility(ctx, final):.4f})")
ok, witness = verify_nash_context(ctx, final)
print(f"no profitable unilateral deviation: {ok}")
if not ok:
    print(f"  counterexample: {witness}")
