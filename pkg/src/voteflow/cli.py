"""Command-line front end: generation, resolution, oracles, and campaigns."""

from __future__ import annotations

import argparse
import json
import sys

from . import analysis, experiments
from .generator import GeneratorParams, generate, save_trace
from .graph import UNUSED, active_nodes, load_graph, save_graph
from .resolvers import (
    resolve_approx,
    resolve_brute_force,
    resolve_greedy_generalized,
    resolve_optimal,
    resolve_random,
    resolve_shortest,
    resolve_splittable,
)


def _add_generator_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--d", type=float, default=0.5, help="delegation probability")
    p.add_argument("--gamma", type=float, default=0.0, help="indegree-bias exponent")
    p.add_argument("--voter-bias", action="store_true", help="bias voters by indegree+2")
    p.add_argument("--seed", type=int, default=0, help="master seed")


def _add_experiment_flags(p: argparse.ArgumentParser) -> None:
    _add_generator_flags(p)
    p.add_argument("--t", type=int, default=1000, help="number of agents per run")
    p.add_argument("--runs", type=int, default=10)
    p.add_argument("--sample-every", type=int, default=50)
    p.add_argument("--out", required=True, help="output CSV path")


def _csv_ints(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x.strip())


def _csv_floats(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _plan(args, mechanisms=None, **overrides) -> experiments.ExperimentPlan:
    kw = dict(
        d=args.d,
        gamma=args.gamma,
        t_max=args.t,
        sample_every=args.sample_every,
        runs=args.runs,
        master_seed=args.seed,
        voter_bias=args.voter_bias,
    )
    if mechanisms is not None:
        kw["mechanisms"] = mechanisms
    kw.update(overrides)
    return experiments.ExperimentPlan(**kw)


def cmd_generate(args) -> int:
    params = GeneratorParams(
        d=args.d,
        k=args.k,
        gamma=args.gamma,
        voter_bias=args.voter_bias,
        p_two=args.p_two,
        seed=args.seed,
    )
    g, trace = generate(params, args.t)
    save_graph(g, args.out)
    if args.trace_out:
        save_trace(trace, args.trace_out)
    print(f"wrote {g.n_agents} agents ({len(g.voters)} voters) to {args.out}")
    return 0


def cmd_resolve(args) -> int:
    g = load_graph(args.graph)
    if args.mechanism == "splittable":
        sol = resolve_splittable(g)
        payload = {
            "mechanism": "splittable",
            "max_weight": sol.max_congestion,
            "utilized_votes": len(active_nodes(g)),
            "wall_time": sol.wall_time,
        }
        print(json.dumps(payload))
        return 0
    resolver = {
        "optimal": resolve_optimal,
        "approx": resolve_approx,
        "greedy": resolve_greedy_generalized,
        "shortest": resolve_shortest,
        "brute": resolve_brute_force,
    }
    if args.mechanism == "random":
        result = resolve_random(g, args.seed)
    else:
        result = resolver[args.mechanism](g)
    payload = {
        "mechanism": result.mechanism,
        "max_weight": result.report.max_weight,
        "utilized_votes": result.report.utilized_votes,
        "wall_time": result.wall_time,
    }
    print(json.dumps(payload))
    if args.emit_assignment:
        choices = [c if c != UNUSED else None for c in result.assignment.choice]
        with open(args.emit_assignment, "w", encoding="utf-8") as fh:
            json.dump({"choice": choices}, fh)
            fh.write("\n")
    return 0


def cmd_oracle(args) -> int:
    print("quantity,index,value")
    seq = analysis.alpha_sequence(args.d, args.k_max)
    for k in range(1, args.k_max + 1):
        print(f"alpha,{k},{seq[k]!r}")
    for t in args.t_list:
        val = analysis.expected_first_voter_weight(t, args.d)
        print(f"expected_first_voter_weight,{t},{val!r}")
    return 0


def cmd_compare(args) -> int:
    plan = _plan(args, mechanisms=tuple(args.mechanisms.split(",")))
    experiments.run_comparison(plan, out=args.out)
    print(f"wrote comparison CSV to {args.out}")
    return 0


def cmd_sweep_k(args) -> int:
    plan = _plan(args, k_values=args.k_list)
    experiments.run_k_sweep(plan, out=args.out)
    print(f"wrote k-sweep CSV to {args.out}")
    return 0


def cmd_sweep_p(args) -> int:
    plan = _plan(args, p_values=args.p_list)
    experiments.run_p_sweep(plan, out=args.out)
    print(f"wrote p-sweep CSV to {args.out}")
    return 0


def cmd_histogram(args) -> int:
    plan = _plan(
        args,
        mechanisms=tuple(args.mechanisms.split(",")),
        sample_every=args.t,  # single snapshot; samples are irrelevant here
    )
    experiments.run_histogram(plan, t_snapshot=args.t_snapshot, out=args.out)
    print(f"wrote histogram CSV to {args.out}")
    return 0


def cmd_bench(args) -> int:
    plan = _plan(
        args,
        mechanisms=tuple(args.mechanisms.split(",")),
        time_budget_secs=args.time_budget_secs,
    )
    experiments.run_bench(plan, out=args.out)
    print(f"wrote bench CSV to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="voteflow",
        description="Delegation resolution and simulation for liquid democracy "
        "with multiple delegation options.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="grow a random nomination graph")
    _add_generator_flags(p)
    p.add_argument("--t", type=int, required=True, help="number of agents")
    p.add_argument("--k", type=int, default=1, help="nominations per delegator")
    p.add_argument("--p-two", type=float, default=None, help="probability of 2 nominations")
    p.add_argument("--out", required=True, help="output graph JSON")
    p.add_argument("--trace-out", default=None, help="optional arrival-trace sidecar")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("resolve", help="resolve a graph with one mechanism")
    p.add_argument("--graph", required=True, help="graph JSON path")
    p.add_argument(
        "--mechanism",
        required=True,
        choices=["optimal", "approx", "greedy", "random", "splittable", "shortest", "brute"],
    )
    p.add_argument("--seed", type=int, default=0, help="seed for the random mechanism")
    p.add_argument("--emit-assignment", default=None, help="write the chosen assignment as JSON")
    p.set_defaults(func=cmd_resolve)

    p = sub.add_parser("oracle", help="print analytic reference values as CSV")
    p.add_argument("--d", type=float, required=True)
    p.add_argument("--k-max", type=int, default=10)
    p.add_argument(
        "--t-list",
        type=_csv_ints,
        default=(1, 10, 100, 1000, 10000),
        help="comma-separated times for the expected-weight table",
    )
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("compare", help="single vs. multiple delegation over time")
    _add_experiment_flags(p)
    p.add_argument("--mechanisms", default="single,greedy,optimal,random")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep-k", help="optimal weight for several nomination counts")
    _add_experiment_flags(p)
    p.add_argument("--k-list", type=_csv_ints, default=(1, 2, 3))
    p.set_defaults(func=cmd_sweep_k)

    p = sub.add_parser("sweep-p", help="optimal weight for mixed 1/2-nomination populations")
    _add_experiment_flags(p)
    p.add_argument("--p-list", type=_csv_floats, default=(0.0, 0.25, 0.5, 0.75, 1.0))
    p.set_defaults(func=cmd_sweep_p)

    p = sub.add_parser("histogram", help="per-run maximum weights at one snapshot")
    _add_experiment_flags(p)
    p.add_argument("--t-snapshot", type=int, default=None)
    p.add_argument("--mechanisms", default="optimal,approx,greedy,random,splittable")
    p.set_defaults(func=cmd_histogram)

    p = sub.add_parser("bench", help="mechanism running times against size")
    _add_experiment_flags(p)
    p.add_argument("--mechanisms", default="greedy,optimal,approx,random,splittable")
    p.add_argument("--time-budget-secs", type=float, default=480.0)
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
