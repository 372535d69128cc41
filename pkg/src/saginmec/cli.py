"""Command-line surface: validate, run, train, sweep, verify.

Failures print one machine-readable JSON record to stderr and exit
nonzero.  Outputs carry the config hash and no timestamps, so identical
invocations produce identical bytes.
"""
from __future__ import annotations

import argparse
import json
import sys
from typing import List, Optional

from .config import (config_hash, default_config, load_config,
                     validate_config)


def _fail(kind: str, message: str, **extra) -> int:
    record = {"error": kind, "message": message}
    record.update(extra)
    print(json.dumps(record, sort_keys=True), file=sys.stderr)
    return 1


class _Parser(argparse.ArgumentParser):
    """Emits usage errors as JSON records instead of prose."""

    def error(self, message):
        print(json.dumps({"error": "usage", "message": message},
                         sort_keys=True), file=sys.stderr)
        self.exit(2)


def _load_cfg(path: Optional[str]):
    return load_config(path) if path else default_config()


def _cmd_validate(args) -> int:
    cfg = load_config(args.config)
    report = validate_config(cfg)
    if report.ok:
        print(f"config ok ({config_hash(cfg)})")
        return 0
    return _fail("invalid-config", "configuration failed validation",
                 issues=[list(issue) for issue in report.issues])


def _cmd_run(args) -> int:
    from .harness import (run_episode, write_report, write_trace,
                          write_trajectory)
    cfg = _load_cfg(args.config)
    want_trace = bool(args.trace or args.trajectory)
    report = run_episode(cfg, policy=args.policy, seed=args.seed,
                         checkpoint=args.checkpoint,
                         with_trace=want_trace, episode=args.episode)
    if args.trace:
        write_trace(args.trace, report)
    if args.trajectory:
        write_trajectory(args.trajectory, report, cfg)
    if args.report:
        write_report(args.report, report)
    else:
        print(json.dumps(report.to_dict(), sort_keys=True, indent=2))
    return 0


def _cmd_train(args) -> int:
    from .maddpg import MaddpgTrainer, write_curve
    cfg = _load_cfg(args.config)
    trainer = MaddpgTrainer(cfg, args.seed)
    curve = trainer.train(args.episodes)
    if args.checkpoint_out:
        trainer.save_checkpoint(args.checkpoint_out)
    if args.curve:
        write_curve(args.curve, curve, cfg)
    costs = curve[:, -2] if len(curve) else []
    summary = {
        "episodes": int(args.episodes),
        "seed": int(args.seed),
        "config_hash": config_hash(cfg),
        "mean_system_cost_last_10":
            float(sum(costs[-10:]) / len(costs[-10:])) if len(curve) else
            None,
    }
    print(json.dumps(summary, sort_keys=True, indent=2))
    return 0


def _parse_numbers(text: str) -> List[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _cmd_sweep(args) -> int:
    from .harness import sweep, write_sweep
    cfg = _load_cfg(args.config)
    rows, aggs = sweep(cfg, args.axis, _parse_numbers(args.values),
                       [int(v) for v in _parse_numbers(args.seeds)],
                       policy=args.policy, checkpoint=args.checkpoint,
                       train_episodes=args.train_episodes)
    if args.out:
        write_sweep(args.out, rows, aggs, cfg)
        print(f"wrote {len(rows)} rows to {args.out} "
              f"(+{args.out}.agg)")
    else:
        for agg in aggs:
            print(json.dumps(agg, sort_keys=True))
    return 0


def _cmd_verify(args) -> int:
    from .verification import (check_allocation, check_channel,
                               check_game, check_gradients,
                               check_propulsion)
    if args.quick:
        results = [
            check_allocation(instances=10, seed=args.seed),
            check_game(instances=5, seed=args.seed),
            check_propulsion(),
            check_channel(geometries=100, seed=args.seed),
            check_gradients(probes=10, seed=args.seed),
        ]
    else:
        from .verification import verify_all
        results = verify_all(seed=args.seed)
    for result in results:
        print(result.line())
    failed = [r.name for r in results if not r.ok]
    if failed:
        return _fail("verification-failed",
                     f"{len(failed)} of {len(results)} checks failed",
                     failed=failed)
    return 0


def build_parser() -> _Parser:
    parser = _Parser(prog="saginmec")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a configuration file")
    p.add_argument("--config", required=True)
    p.set_defaults(fn=_cmd_validate)

    p = sub.add_parser("run", help="play one episode and report metrics")
    p.add_argument("--config")
    p.add_argument("--policy", default="maddpg-cocg",
                   choices=["maddpg-cocg", "ecra", "no", "random"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--episode", type=int, default=0)
    p.add_argument("--checkpoint")
    p.add_argument("--trace", help="write per-slot records here")
    p.add_argument("--trajectory", help="write per-slot positions CSV here")
    p.add_argument("--report", help="write the report here instead of "
                   "stdout")
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("train", help="train the learned stack")
    p.add_argument("--config")
    p.add_argument("--episodes", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--checkpoint-out")
    p.add_argument("--curve", help="write the learning curve CSV here")
    p.set_defaults(fn=_cmd_train)

    p = sub.add_parser("sweep", help="metric grid over one parameter axis")
    p.add_argument("--config")
    p.add_argument("--axis", required=True,
                   choices=["num_uds", "task_size_mean", "f_uav_max"])
    p.add_argument("--values", required=True,
                   help="comma-separated axis values")
    p.add_argument("--seeds", required=True, help="comma-separated seeds")
    p.add_argument("--policy", default="random",
                   choices=["maddpg-cocg", "ecra", "no", "random"])
    p.add_argument("--checkpoint")
    p.add_argument("--train-episodes", type=int,
                   help="train per swept value instead of reusing a "
                   "checkpoint")
    p.add_argument("--out", help="write rows CSV here (aggregates beside "
                   "it)")
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("verify", help="run the self-check probe suite")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--quick", action="store_true",
                   help="smaller sample sizes")
    p.set_defaults(fn=_cmd_verify)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except FileNotFoundError as exc:
        return _fail("file-not-found", str(exc))
    except (ValueError, RuntimeError) as exc:
        return _fail(type(exc).__name__.lower(), str(exc))


if __name__ == "__main__":
    sys.exit(main())
