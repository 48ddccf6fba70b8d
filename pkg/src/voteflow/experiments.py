"""Monte-Carlo campaigns over generated graphs, written as flat CSV.

Every runner emits the same record shape so downstream plotting stays a
pure CSV consumer. One row is one (mechanism, run, time step) measurement;
parameter columns carry the generator settings and the per-run seed.

Seeds are derived by hashing (master_seed, run, d, gamma): runs never share
randomness, while sweeps over k or over the two-nomination probability
reuse the same arrival coin flips per run, which reduces variance when
comparing curves.
"""

from __future__ import annotations

import csv
import hashlib
import logging
import time
from dataclasses import dataclass

logger = logging.getLogger(__name__)

from .generator import ArrivalTrace, GeneratorParams, generate, graph_from_trace
from .graph import NominationGraph, active_nodes
from .resolvers import (
    OnlineGreedy,
    resolve_approx,
    resolve_greedy_generalized,
    resolve_optimal,
    resolve_random,
    resolve_shortest,
    resolve_splittable,
)

CSV_COLUMNS = (
    "mechanism",
    "run",
    "t",
    "max_weight",
    "utilized_votes",
    "wall_time_seconds",
    "d",
    "gamma",
    "k",
    "p_two",
    "seed",
)

KNOWN_MECHANISMS = (
    "single",
    "greedy",
    "optimal",
    "approx",
    "random",
    "splittable",
    "shortest",
)


@dataclass(frozen=True)
class ExperimentRecord:
    """One CSV row. max_weight is fractional only for the splittable rows."""

    mechanism: str
    run: int
    t: int
    max_weight: float
    utilized_votes: int
    wall_time_seconds: float
    d: float
    gamma: float
    k: int | None
    p_two: float | None
    seed: int

    def to_row(self) -> list[str]:
        max_w = self.max_weight
        return [
            self.mechanism,
            str(self.run),
            str(self.t),
            str(int(max_w)) if float(max_w).is_integer() else repr(float(max_w)),
            str(self.utilized_votes),
            repr(float(self.wall_time_seconds)),
            repr(float(self.d)),
            repr(float(self.gamma)),
            "" if self.k is None else str(self.k),
            "" if self.p_two is None else repr(float(self.p_two)),
            str(self.seed),
        ]


@dataclass(frozen=True)
class ExperimentPlan:
    """Shared configuration of all runners; not every field matters to each."""

    d: float = 0.5
    gamma: float = 0.0
    t_max: int = 1000
    sample_every: int = 50
    runs: int = 10
    master_seed: int = 0
    mechanisms: tuple[str, ...] = ("single", "greedy", "optimal", "random")
    k_values: tuple[int, ...] = (1, 2, 3)
    p_values: tuple[float, ...] = (0.0, 0.25, 0.5, 0.75, 1.0)
    voter_bias: bool = False
    time_budget_secs: float = 480.0

    def __post_init__(self):
        GeneratorParams(d=self.d, gamma=self.gamma)  # validates d, gamma
        if self.runs < 1:
            raise ValueError(f"runs must be >= 1, got {self.runs}")
        if not 1 <= self.sample_every <= self.t_max:
            raise ValueError(
                f"sample_every must lie in 1..t_max, got {self.sample_every}"
            )
        if self.t_max % self.sample_every != 0:
            raise ValueError(
                f"sample_every={self.sample_every} must divide t_max={self.t_max}"
            )
        for m in self.mechanisms:
            if m not in KNOWN_MECHANISMS:
                raise ValueError(f"unknown mechanism {m!r}; known: {KNOWN_MECHANISMS}")
        for k in self.k_values:
            if k < 1:
                raise ValueError(f"k values must be >= 1, got {k}")
        for p in self.p_values:
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"p values must lie in [0, 1], got {p}")
        if self.time_budget_secs <= 0:
            raise ValueError("time_budget_secs must be positive")

    def sample_points(self) -> tuple[int, ...]:
        return tuple(range(self.sample_every, self.t_max + 1, self.sample_every))


def derive_seed(*parts) -> int:
    """Stable 63-bit seed from arbitrary parts (never Python's salted hash)."""
    text = ":".join(repr(p) for p in parts)
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") >> 1


def write_csv(records: list[ExperimentRecord], path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(CSV_COLUMNS)
        for rec in records:
            writer.writerow(rec.to_row())


def _resolve_on(mechanism: str, g: NominationGraph, seed: int):
    """Dispatch a from-scratch mechanism; returns (value, utilized, seconds)."""
    if mechanism == "splittable":
        sol = resolve_splittable(g)
        return sol.max_congestion, len(active_nodes(g)), sol.wall_time
    if mechanism == "optimal":
        res = resolve_optimal(g)
    elif mechanism == "approx":
        res = resolve_approx(g)
    elif mechanism == "random":
        res = resolve_random(g, seed)
    elif mechanism == "shortest":
        res = resolve_shortest(g)
    elif mechanism in ("greedy", "single"):
        res = resolve_greedy_generalized(g)
    else:
        raise ValueError(f"unknown mechanism {mechanism!r}")
    return res.report.max_weight, res.report.utilized_votes, res.wall_time


def _online_rows(
    mechanism: str,
    trace: ArrivalTrace,
    points: tuple[int, ...],
    base: dict,
) -> list[ExperimentRecord]:
    """Greedy resolution along the trace, sampled incrementally.

    wall_time_seconds is cumulative: the cost of resolving everything up
    to the sampled step.
    """
    wanted = set(points)
    online = OnlineGreedy()
    rows = []
    tic = time.perf_counter()
    for i, ev in enumerate(trace.events, start=1):
        online.insert(ev)
        if i in wanted:
            rows.append(
                ExperimentRecord(
                    mechanism=mechanism,
                    t=i,
                    max_weight=online.max_weight,
                    utilized_votes=i,
                    wall_time_seconds=time.perf_counter() - tic,
                    **base,
                )
            )
    return rows


def run_comparison(plan: ExperimentPlan, out=None) -> list[ExperimentRecord]:
    """Single delegation vs. mechanisms on double delegation, over time.

    Per run one k=1 graph and one k=2 graph are generated from the same
    derived seed; each sampled step resolves the prefix of the final graph
    (greedy and the forced single-delegation curve run incrementally).
    """
    records: list[ExperimentRecord] = []
    points = plan.sample_points()
    for run in range(plan.runs):
        seed = derive_seed(plan.master_seed, run, plan.d, plan.gamma)
        trace_by_k: dict[int, ArrivalTrace] = {}

        def trace_for(k: int) -> ArrivalTrace:
            if k not in trace_by_k:
                params = GeneratorParams(
                    d=plan.d, k=k, gamma=plan.gamma, voter_bias=plan.voter_bias, seed=seed
                )
                trace_by_k[k] = generate(params, plan.t_max)[1]
            return trace_by_k[k]

        run_records: list[ExperimentRecord] = []
        try:
            for mechanism in plan.mechanisms:
                k = 1 if mechanism == "single" else 2
                base = dict(
                    run=run, d=plan.d, gamma=plan.gamma, k=k, p_two=None, seed=seed
                )
                trace = trace_for(k)
                if mechanism in ("single", "greedy"):
                    run_records.extend(_online_rows(mechanism, trace, points, base))
                    continue
                for t in points:
                    g = graph_from_trace(trace, t)
                    value, utilized, secs = _resolve_on(
                        mechanism, g, derive_seed(seed, mechanism, t)
                    )
                    run_records.append(
                        ExperimentRecord(
                            mechanism=mechanism,
                            t=t,
                            max_weight=value,
                            utilized_votes=utilized,
                            wall_time_seconds=secs,
                            **base,
                        )
                    )
        except RuntimeError as exc:  # solver hiccup: drop the run, keep the campaign
            logger.warning("comparison run %d aborted: %s", run, exc)
            continue
        records.extend(run_records)
    if out is not None:
        write_csv(records, out)
    return records


def run_k_sweep(plan: ExperimentPlan, out=None) -> list[ExperimentRecord]:
    """Optimal maximum weight for each nomination count in plan.k_values.

    The same derived seed is reused across k, so the arrival coin flips
    are coupled between the swept curves.
    """
    records: list[ExperimentRecord] = []
    points = plan.sample_points()
    for run in range(plan.runs):
        seed = derive_seed(plan.master_seed, run, plan.d, plan.gamma)
        run_records: list[ExperimentRecord] = []
        try:
            for k in plan.k_values:
                params = GeneratorParams(
                    d=plan.d, k=k, gamma=plan.gamma, voter_bias=plan.voter_bias, seed=seed
                )
                trace = generate(params, plan.t_max)[1]
                for t in points:
                    g = graph_from_trace(trace, t)
                    value, utilized, secs = _resolve_on("optimal", g, seed)
                    run_records.append(
                        ExperimentRecord(
                            mechanism="optimal",
                            run=run,
                            t=t,
                            max_weight=value,
                            utilized_votes=utilized,
                            wall_time_seconds=secs,
                            d=plan.d,
                            gamma=plan.gamma,
                            k=k,
                            p_two=None,
                            seed=seed,
                        )
                    )
        except RuntimeError as exc:
            logger.warning("k-sweep run %d aborted: %s", run, exc)
            continue
        records.extend(run_records)
    if out is not None:
        write_csv(records, out)
    return records


def run_p_sweep(plan: ExperimentPlan, out=None) -> list[ExperimentRecord]:
    """Optimal maximum weight when delegators issue 2 options with probability p."""
    records: list[ExperimentRecord] = []
    points = plan.sample_points()
    for run in range(plan.runs):
        seed = derive_seed(plan.master_seed, run, plan.d, plan.gamma)
        run_records: list[ExperimentRecord] = []
        try:
            for p in plan.p_values:
                params = GeneratorParams(
                    d=plan.d,
                    gamma=plan.gamma,
                    voter_bias=plan.voter_bias,
                    p_two=p,
                    seed=seed,
                )
                trace = generate(params, plan.t_max)[1]
                for t in points:
                    g = graph_from_trace(trace, t)
                    value, utilized, secs = _resolve_on("optimal", g, seed)
                    run_records.append(
                        ExperimentRecord(
                            mechanism="optimal",
                            run=run,
                            t=t,
                            max_weight=value,
                            utilized_votes=utilized,
                            wall_time_seconds=secs,
                            d=plan.d,
                            gamma=plan.gamma,
                            k=None,
                            p_two=p,
                            seed=seed,
                        )
                    )
        except RuntimeError as exc:
            logger.warning("p-sweep run %d aborted: %s", run, exc)
            continue
        records.extend(run_records)
    if out is not None:
        write_csv(records, out)
    return records


def run_histogram(
    plan: ExperimentPlan, t_snapshot: int | None = None, out=None
) -> list[ExperimentRecord]:
    """Per-run maximum weight of each mechanism at one snapshot time."""
    t_snap = plan.t_max if t_snapshot is None else t_snapshot
    if not 1 <= t_snap <= plan.t_max:
        raise ValueError(f"t_snapshot must lie in 1..t_max, got {t_snap}")
    records: list[ExperimentRecord] = []
    for run in range(plan.runs):
        seed = derive_seed(plan.master_seed, run, plan.d, plan.gamma)
        graph_by_k: dict[int, NominationGraph] = {}

        def graph_for(k: int) -> NominationGraph:
            if k not in graph_by_k:
                params = GeneratorParams(
                    d=plan.d, k=k, gamma=plan.gamma, voter_bias=plan.voter_bias, seed=seed
                )
                graph_by_k[k] = generate(params, t_snap)[0]
            return graph_by_k[k]

        run_records: list[ExperimentRecord] = []
        try:
            for mechanism in plan.mechanisms:
                k = 1 if mechanism == "single" else 2
                g = graph_for(k)
                value, utilized, secs = _resolve_on(
                    mechanism, g, derive_seed(seed, mechanism, t_snap)
                )
                run_records.append(
                    ExperimentRecord(
                        mechanism=mechanism,
                        run=run,
                        t=t_snap,
                        max_weight=value,
                        utilized_votes=utilized,
                        wall_time_seconds=secs,
                        d=plan.d,
                        gamma=plan.gamma,
                        k=k,
                        p_two=None,
                        seed=seed,
                    )
                )
        except RuntimeError as exc:
            logger.warning("histogram run %d aborted: %s", run, exc)
            continue
        records.extend(run_records)
    if out is not None:
        write_csv(records, out)
    return records


def run_bench(plan: ExperimentPlan, out=None) -> list[ExperimentRecord]:
    """Wall time of each mechanism against instance size.

    Every mechanism re-resolves each sampled prefix from scratch. A
    mechanism's curve is discontinued for a run once its cumulative time
    in that run exceeds plan.time_budget_secs.
    """
    records: list[ExperimentRecord] = []
    points = plan.sample_points()
    for run in range(plan.runs):
        seed = derive_seed(plan.master_seed, run, plan.d, plan.gamma)
        need_k = {1 if m == "single" else 2 for m in plan.mechanisms}
        trace_by_k: dict[int, ArrivalTrace] = {}
        for k in sorted(need_k):
            params = GeneratorParams(
                d=plan.d, k=k, gamma=plan.gamma, voter_bias=plan.voter_bias, seed=seed
            )
            trace_by_k[k] = generate(params, plan.t_max)[1]
        spent = {m: 0.0 for m in plan.mechanisms}
        run_records: list[ExperimentRecord] = []
        try:
            for t in points:
                prefix_by_k = {
                    k: graph_from_trace(tr, t) for k, tr in trace_by_k.items()
                }
                for mechanism in plan.mechanisms:
                    if spent[mechanism] > plan.time_budget_secs:
                        continue
                    g = prefix_by_k[1 if mechanism == "single" else 2]
                    value, utilized, secs = _resolve_on(
                        mechanism, g, derive_seed(seed, mechanism, t)
                    )
                    spent[mechanism] += secs
                    run_records.append(
                        ExperimentRecord(
                            mechanism=mechanism,
                            run=run,
                            t=t,
                            max_weight=value,
                            utilized_votes=utilized,
                            wall_time_seconds=secs,
                            d=plan.d,
                            gamma=plan.gamma,
                            k=1 if mechanism == "single" else 2,
                            p_two=None,
                            seed=seed,
                        )
                    )
        except RuntimeError as exc:
            logger.warning("bench run %d aborted: %s", run, exc)
            continue
        records.extend(run_records)
    if out is not None:
        write_csv(records, out)
    return records
