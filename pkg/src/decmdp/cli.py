"""Command-line front end.

Exit codes: 0 on success (a converged solve), 2 when a solve stops before
the gap closes, 1 on any error, including bad flags.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import bench
from .exceptions import DecMdpError
from .fileio import (FormatError, PolicyFile, read_problem, serialize_policy, serialize_problem,
                     stats_csv, trace_csv)
from .mps import MODES, SolveConfig, solve
from .oracle import best_history, best_markov

EXIT_OK, EXIT_ERROR, EXIT_NOT_CONVERGED = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    """Argument parser that reports usage errors with exit code 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _bench_flags(p):
    g = p.add_argument_group("benchmark parameters")
    g.add_argument("--side", type=int, default=3, help="meeting-grid side length")
    g.add_argument("--slip", type=float, default=0.1, help="meeting-grid move failure probability")
    g.add_argument("--reward-on", choices=("after", "before"), default="after",
                   help="meeting-grid reward on co-location after or before the move")
    g.add_argument("--agents", type=int, default=2, help="number of agents (recycling, random-team)")
    g.add_argument("--klass", type=int, default=0, choices=range(4),
                   help="random-team interaction class 0..3")
    g.add_argument("--bench-seed", type=int, default=0, help="random-team generator seed")
    d = bench.RecyclingParams()
    g.add_argument("--alpha", type=float, default=d.alpha)
    g.add_argument("--beta", type=float, default=d.beta)
    g.add_argument("--r-search", type=float, default=d.r_search)
    g.add_argument("--r-wait", type=float, default=d.r_wait)
    g.add_argument("--r-rescue", type=float, default=d.r_rescue)
    g.add_argument("--team-bonus", type=float, default=None,
                   help="bonus when all robots search (default 1.5 for recycling, 0 for random-team)")


def _source_flags(p, required=True):
    src = p.add_mutually_exclusive_group(required=required)
    src.add_argument("--problem", type=Path, help="problem file")
    src.add_argument("--bench", choices=bench.BENCHMARKS, help="built-in benchmark")
    p.add_argument("--horizon", type=int, help="override the planning horizon")
    _bench_flags(p)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="decmdp", description="Optimal Markov policies for transition-independent "
                                                "Dec-MDPs by heuristic search over occupancy states.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="solve a problem to epsilon-optimality")
    _source_flags(p)
    p.add_argument("--epsilon", type=float, default=SolveConfig.epsilon)
    p.add_argument("--mode", choices=MODES, default="cop")
    p.add_argument("--seed", type=int, default=0, help="seed of the initial lower-bound policy")
    p.add_argument("--trial-cap", type=int, default=SolveConfig.trial_cap)
    p.add_argument("--time-limit", type=float, default=None, help="stop after this many seconds")
    p.add_argument("--policy-out", type=Path)
    p.add_argument("--trace-out", type=Path)
    p.add_argument("--stats-out", type=Path)

    p = sub.add_parser("validate", help="check a problem file")
    p.add_argument("path", type=Path)

    p = sub.add_parser("oracle", help="brute-force optimum of a tiny problem")
    _source_flags(p)
    p.add_argument("--history", action="store_true", help="also enumerate history-dependent policies")
    p.add_argument("--cap", type=int, default=10**7, help="maximum number of policies enumerated")

    p = sub.add_parser("gen", help="write a benchmark as a problem file")
    p.add_argument("name", choices=bench.BENCHMARKS)
    p.add_argument("--horizon", type=int)
    p.add_argument("-o", "--output", type=Path, help="output path (default: standard output)")
    _bench_flags(p)
    return parser


def make_bench(args, name=None):
    """Benchmark model from parsed flags."""
    name = name or args.bench
    horizon = args.horizon
    if name == "meeting-grid":
        return bench.gen_meeting_grid(args.side, args.slip, horizon=horizon or 5,
                                      reward_on=args.reward_on)
    bonus = args.team_bonus
    if name == "recycling":
        params = bench.RecyclingParams(args.alpha, args.beta, args.r_search, args.r_wait,
                                       args.r_rescue, 1.5 if bonus is None else bonus,
                                       horizon or 10)
        return bench.gen_recycling(params, n_agents=args.agents)
    params = bench.RecyclingParams(args.alpha, args.beta, args.r_search, args.r_wait,
                                   args.r_rescue, 0.0 if bonus is None else bonus)
    return bench.gen_random_team(args.agents, args.klass, args.bench_seed, horizon=horizon or 10,
                                 params=params)


def _load(args):
    if args.problem is not None:
        model = read_problem(args.problem)
        if args.horizon is not None:
            model = model.with_horizon(args.horizon)
        return model, args.problem.stem
    model = make_bench(args)
    return model, model.name


def _cmd_solve(args):
    model, label = _load(args)
    config = SolveConfig(epsilon=args.epsilon, mode=args.mode, seed=args.seed,
                         trial_cap=args.trial_cap, time_limit=args.time_limit)
    sol = solve(model, config)
    if args.policy_out:
        pf = PolicyFile(sol.policy, sol.lower, sol.upper, config.epsilon, config.seed)
        args.policy_out.write_text(serialize_policy(pf), encoding="utf-8")
    if args.trace_out:
        args.trace_out.write_text(trace_csv(sol), encoding="utf-8")
    if args.stats_out:
        args.stats_out.write_text(stats_csv(label, model, config, sol), encoding="utf-8")
    status = "converged" if sol.converged else ("time limit" if sol.timed_out else "trial cap")
    print(f"{label}: T={model.horizon} lower={sol.lower:.2f} upper={sol.upper:.2f} "
          f"gap={sol.gap:.2e} trials={sol.trials} backups={sol.backups} "
          f"time={sol.wall_seconds:.2f}s {status}")
    return EXIT_OK if sol.converged else EXIT_NOT_CONVERGED


def _cmd_validate(args):
    model = read_problem(args.path)
    print(f"{args.path}: valid ({model.n_agents} agents, |S|={model.n_states}, "
          f"|A|={model.n_actions}, T={model.horizon})")
    return EXIT_OK


def _cmd_oracle(args):
    model, label = _load(args)
    value, _ = best_markov(model, cap=args.cap)
    print(f"{label}: best Markov value {value:.17g}")
    if args.history:
        print(f"{label}: best history value {best_history(model, cap=args.cap):.17g}")
    return EXIT_OK


def _cmd_gen(args):
    text = serialize_problem(make_bench(args, args.name))
    if args.output:
        args.output.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


_COMMANDS = {"solve": _cmd_solve, "validate": _cmd_validate, "oracle": _cmd_oracle, "gen": _cmd_gen}


def run_cli(argv=None) -> int:
    """Run one command and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code not in (0, None) else EXIT_OK
    try:
        return _COMMANDS[args.command](args)
    except FormatError as exc:
        where = getattr(args, "path", None) or getattr(args, "problem", None)
        print(f"{where}: {exc}", file=sys.stderr)
    except (DecMdpError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_ERROR


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
