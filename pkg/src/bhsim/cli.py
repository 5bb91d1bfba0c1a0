"""Command-line harness: run scenarios, generate graphs, verify traces."""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import harness, tvg
from .engine import ScenarioError, VerificationError
from .tvg import GraphError, IllegalAdversary


def _cmd_run(args) -> int:
    scenario = harness.load_scenario(args.scenario)
    if args.seed is not None:
        scenario.seed = args.seed
    outcome = harness.run_scenario(scenario, trace_path=args.trace)
    witness = ""
    if outcome.verdict == "Solved":
        witness = f" witness=({outcome.witness_node},{outcome.witness_port}) by agent {outcome.agent}"
    print(
        f"{scenario.name}: {outcome.verdict}{witness} "
        f"rounds={outcome.rounds_used} deaths={outcome.deaths}"
    )
    return harness.EXIT_CODES[outcome.verdict]


def _cmd_gen(args) -> int:
    params = {}
    for key in ("n", "m", "p", "a", "b"):
        v = getattr(args, key)
        if v is not None:
            params[key] = v
    if args.kind == "random_connected":
        params["seed"] = args.gseed
    bh = args.bh if args.bh is not None and args.bh >= 0 else None
    f = harness.generate_graph(args.kind, bh=bh, **params)
    tvg.write_graph_file(f, args.out)
    print(f"wrote {args.out}: n={f.node_count} m={f.m} bh={-1 if f.black_hole is None else f.black_hole}")
    return 0


def _cmd_verify(args) -> int:
    report = harness.verify_trace(args.trace, args.graph)
    if report.ok:
        print(f"all-pass: {report.rounds} rounds checked")
        return 0
    for v in report.violations:
        where = "outcome" if v["round"] is None else f"round {v['round']}"
        print(f"violation at {where}: {v['code']} ({v['detail']})")
    return 5


def _cmd_batch(args) -> int:
    files = sorted(Path(args.dir).glob("*.scenario"))
    if not files:
        print(f"no *.scenario files in {args.dir}", file=sys.stderr)
        return 4
    lines = []
    worst = 0
    for path in files:
        scenario = harness.load_scenario(str(path))
        outcome = harness.run_scenario(scenario)
        lines.append(
            f"{path.name} {outcome.verdict} rounds={outcome.rounds_used} deaths={outcome.deaths}"
        )
        worst = max(worst, harness.EXIT_CODES[outcome.verdict])
    report = "\n".join(lines) + "\n"
    if args.report:
        Path(args.report).write_text(report)
    print(report, end="")
    return worst


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="bhsim",
        description="Black-hole search on always-connected dynamic graphs",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario file")
    p_run.add_argument("--scenario", required=True)
    p_run.add_argument("--seed", type=int, default=None)
    p_run.add_argument("--trace", default=None, help="write the round trace here")
    p_run.set_defaults(func=_cmd_run)

    p_gen = sub.add_parser("gen", help="generate a graph file")
    p_gen.add_argument("--kind", required=True)
    p_gen.add_argument("--out", required=True)
    p_gen.add_argument("--n", type=int)
    p_gen.add_argument("--m", type=int)
    p_gen.add_argument("--p", type=int)
    p_gen.add_argument("--a", type=int)
    p_gen.add_argument("--b", type=int)
    p_gen.add_argument("--bh", type=int, default=None)
    p_gen.add_argument("--gseed", type=int, default=0)
    p_gen.set_defaults(func=_cmd_gen)

    p_verify = sub.add_parser("verify", help="replay invariant checks on a trace")
    p_verify.add_argument("--trace", required=True)
    p_verify.add_argument("--graph", required=True)
    p_verify.set_defaults(func=_cmd_verify)

    p_batch = sub.add_parser("batch", help="run every *.scenario in a directory")
    p_batch.add_argument("--dir", required=True)
    p_batch.add_argument("--report", default=None)
    p_batch.set_defaults(func=_cmd_batch)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ScenarioError, GraphError, FileNotFoundError, KeyError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 4
    except (VerificationError, IllegalAdversary) as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())
