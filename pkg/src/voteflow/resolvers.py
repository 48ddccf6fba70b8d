"""Resolution mechanisms: turning nomination graphs into delegation choices.

All mechanisms follow the same pipeline: restrict the graph to its active
part, pick one nomination per active delegator there, and translate the
result back (inactive delegators stay unused). They differ in how the
choices are made:

* ``optimal``      minimum possible maximum voter weight (exact MILP),
* ``brute_force``  exhaustive enumeration, the testing oracle for optimal,
* ``splittable``   LP relaxation where votes may split into fractions,
* ``approx``       deterministic rounding of the splittable solution,
* ``greedy``       power-of-choice (online over a trace, or generalized
                   over strongly connected components of any graph),
* ``random``       uniform choice per delegator,
* ``shortest``     BFS shortest-path forest toward the voters.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from heapq import heapify, heappop, heappush

import numpy as np
from scipy.optimize import Bounds, LinearConstraint, linprog, milp
from scipy.sparse import csr_matrix

from .generator import ArrivalTrace, graph_from_trace
from .graph import (
    UNUSED,
    DelegationAssignment,
    Flow,
    InvalidAssignmentError,
    NominationGraph,
    WeightReport,
    compute_weights,
    restrict_to_active,
    scc_reverse_topological,
    shortest_path_assignment,
)

LP_TOL = 1e-6  # optimality / feasibility tolerance for the flow LP

RANDOM_RESAMPLE_ROUNDS = 100  # dead-configuration retries before falling back


@dataclass(frozen=True)
class ResolutionResult:
    """A maximal assignment together with its weight report and timing."""

    mechanism: str
    assignment: DelegationAssignment
    report: WeightReport
    wall_time: float


@dataclass(frozen=True)
class SplittableSolution:
    """Optimal fractional relaxation: per-edge flow and voter congestions."""

    flow: Flow
    congestion: dict[int, float]
    max_congestion: float
    wall_time: float


# --- shared plumbing ---------------------------------------------------------


def _edge_list(rg: NominationGraph) -> list[tuple[int, int, int]]:
    """Flat (source, option, target) list over all nominations."""
    return [
        (u, opt, t)
        for u in range(rg.n_agents)
        for opt, t in enumerate(rg.nominations[u])
    ]


def _finish(
    mechanism: str,
    g: NominationGraph,
    assignment: DelegationAssignment,
    tic: float,
) -> ResolutionResult:
    report = compute_weights(g, assignment)
    return ResolutionResult(
        mechanism=mechanism,
        assignment=assignment,
        report=report,
        wall_time=time.perf_counter() - tic,
    )


def _trivial_choice(g: NominationGraph) -> DelegationAssignment:
    return DelegationAssignment(tuple([UNUSED] * g.n_agents))


# --- shortest path -----------------------------------------------------------


def resolve_shortest(g: NominationGraph) -> ResolutionResult:
    """Shortest-path-forest resolution; cheap feasibility baseline."""
    tic = time.perf_counter()
    return _finish("shortest", g, shortest_path_assignment(g), tic)


# --- greedy ------------------------------------------------------------------


class OnlineGreedy:
    """Incremental power-of-choice resolution along an arrival order.

    Each inserted delegator looks up the voter its options currently lead
    to and picks the option whose voter has minimum weight (ties: lowest
    voter id, then lowest option index). Because agents only nominate
    earlier agents, every nominee's voter link is already final, so lookup
    is O(1) per option.
    """

    def __init__(self):
        self._voter_of: list[int] = []
        self._choice: list[int] = []
        self.weights: dict[int, int] = {}
        self.max_weight = 0

    @property
    def n_agents(self) -> int:
        return len(self._voter_of)

    def insert(self, targets: tuple[int, ...] | None) -> None:
        i = len(self._voter_of)
        if targets is None:
            self._voter_of.append(i)
            self._choice.append(UNUSED)
            self.weights[i] = 1
            if self.max_weight < 1:
                self.max_weight = 1
            return
        if not targets:
            raise ValueError(f"delegator {i} inserted without targets")
        best = None
        for opt, tgt in enumerate(targets):
            if not 0 <= tgt < i:
                raise ValueError(f"agent {i} nominates not-yet-inserted agent {tgt}")
            v = self._voter_of[tgt]
            key = (self.weights[v], v, opt)
            if best is None or key < best:
                best = key
        w, v, opt = best
        self._choice.append(opt)
        self._voter_of.append(v)
        self.weights[v] = w + 1
        if w + 1 > self.max_weight:
            self.max_weight = w + 1

    def assignment(self) -> DelegationAssignment:
        return DelegationAssignment(tuple(self._choice))


def resolve_greedy_online(trace: ArrivalTrace) -> ResolutionResult:
    """Greedy resolution in arrival order of a generated trace."""
    tic = time.perf_counter()
    online = OnlineGreedy()
    for ev in trace.events:
        online.insert(ev)
    g = graph_from_trace(trace)
    return _finish("greedy", g, online.assignment(), tic)


def _greedy_core(g: NominationGraph) -> DelegationAssignment:
    """Generalized greedy over strongly connected components.

    Components are visited voters-first; inside a component, any agent
    with a nomination into the already-resolved region is a candidate, the
    lowest-id candidate resolves first, and it picks the option whose
    current voter weight is minimal (ties: lowest voter id, lowest option
    index). Agents in components that never reach a voter stay unused.
    """
    n = g.n_agents
    voter_of = [-1] * n
    weights: dict[int, int] = {}
    choice = [UNUSED] * n
    for comp in scc_reverse_topological(g):
        if len(comp) == 1 and g.is_voter[comp[0]]:
            v = comp[0]
            voter_of[v] = v
            weights[v] = 1
            continue
        members = set(comp)
        ready = [i for i in comp if any(voter_of[t] != -1 for t in g.nominations[i])]
        heapify(ready)
        queued = set(ready)
        while ready:
            i = heappop(ready)
            if voter_of[i] != -1:
                continue
            best = None
            for opt, t in enumerate(g.nominations[i]):
                v = voter_of[t]
                if v == -1:
                    continue
                key = (weights[v], v, opt)
                if best is None or key < best:
                    best = key
            _w, v, opt = best
            choice[i] = opt
            voter_of[i] = v
            weights[v] += 1
            for src, _opt in g.incoming[i]:
                if src in members and voter_of[src] == -1 and src not in queued:
                    heappush(ready, src)
                    queued.add(src)
    return DelegationAssignment(tuple(choice))


def resolve_greedy_generalized(g: NominationGraph) -> ResolutionResult:
    """Greedy resolution of an arbitrary (possibly cyclic) graph."""
    tic = time.perf_counter()
    return _finish("greedy", g, _greedy_core(g), tic)


# --- random ------------------------------------------------------------------


def resolve_random(g: NominationGraph, seed: int = 0) -> ResolutionResult:
    """Uniform random choice per active delegator, deterministic per seed.

    On acyclic active subgraphs the first sample is always valid. Cyclic
    inputs may produce choice cycles; those delegators are re-sampled up to
    RANDOM_RESAMPLE_ROUNDS times and then fall back to their shortest-path
    choice, which always reaches a voter.
    """
    tic = time.perf_counter()
    restriction = restrict_to_active(g)
    rg = restriction.graph
    rng = np.random.default_rng(seed)
    choice = [
        UNUSED if rg.is_voter[i] else int(rng.integers(len(rg.nominations[i])))
        for i in range(rg.n_agents)
    ]
    stuck = _unreaching(rg, choice)
    rounds = 0
    while stuck and rounds < RANDOM_RESAMPLE_ROUNDS:
        for i in stuck:
            choice[i] = int(rng.integers(len(rg.nominations[i])))
        stuck = _unreaching(rg, choice)
        rounds += 1
    if stuck:
        fallback = shortest_path_assignment(rg)
        for i in stuck:
            choice[i] = fallback.choice[i]
    lifted = restriction.lift_assignment(
        DelegationAssignment(tuple(choice)), g.n_agents
    )
    return _finish("random", g, lifted, tic)


def _unreaching(rg: NominationGraph, choice: list[int]) -> list[int]:
    """Delegators whose chosen path never reaches a voter (sorted)."""
    n = rg.n_agents
    state = [0] * n  # 0 unknown, 1 on path, 2 reaches, 3 dead
    for v in range(n):
        if rg.is_voter[v]:
            state[v] = 2
    for start in range(n):
        if state[start]:
            continue
        path = []
        node = start
        while state[node] == 0:
            state[node] = 1
            path.append(node)
            node = rg.nominations[node][choice[node]]
        verdict = 2 if state[node] == 2 else 3
        for p in path:
            state[p] = verdict
    return [i for i in range(n) if state[i] == 3]


# --- brute force -------------------------------------------------------------


def resolve_brute_force(
    g: NominationGraph,
    *,
    max_assignments: int = 1_000_000,
    max_delegators: int = 20,
) -> ResolutionResult:
    """Exhaustive minimizer of the maximum voter weight; testing oracle.

    Enumerates every choice combination over the active subgraph, skipping
    combinations whose chosen edges contain a cycle. Rejects instances
    whose enumeration budget (delegator count or product of choice counts)
    is exceeded.
    """
    tic = time.perf_counter()
    restriction = restrict_to_active(g)
    rg = restriction.graph
    delegators = [i for i in range(rg.n_agents) if not rg.is_voter[i]]
    if len(delegators) > max_delegators:
        raise ValueError(
            f"{len(delegators)} active delegators exceed the brute-force cap "
            f"of {max_delegators}"
        )
    n_combos = 1
    for i in delegators:
        n_combos *= len(rg.nominations[i])
        if n_combos > max_assignments:
            raise ValueError(
                f"choice-combination count exceeds the brute-force budget "
                f"of {max_assignments}"
            )
    best_choice = None
    best_max = None
    for combo in itertools.product(*(range(len(rg.nominations[i])) for i in delegators)):
        choice = [UNUSED] * rg.n_agents
        for i, c in zip(delegators, combo):
            choice[i] = c
        candidate = DelegationAssignment(tuple(choice))
        try:
            report = compute_weights(rg, candidate)
        except InvalidAssignmentError:
            continue  # choices formed a cycle
        if best_max is None or report.max_weight < best_max:
            best_max = report.max_weight
            best_choice = candidate
    # The shortest-path forest guarantees at least one valid combination.
    if best_choice is None:
        raise RuntimeError("no valid assignment found on an active subgraph")
    lifted = restriction.lift_assignment(best_choice, g.n_agents)
    return _finish("brute_force", g, lifted, tic)


# --- splittable LP -----------------------------------------------------------


class _MatrixEntries:
    """Accumulates (row, col, value) triples for a sparse constraint matrix."""

    def __init__(self):
        self.rows: list[int] = []
        self.cols: list[int] = []
        self.vals: list[float] = []

    def add(self, r: int, c: int, v: float) -> None:
        self.rows.append(r)
        self.cols.append(c)
        self.vals.append(v)

    def matrix(self, n_rows: int, n_cols: int) -> csr_matrix:
        return csr_matrix((self.vals, (self.rows, self.cols)), shape=(n_rows, n_cols))


def _splittable_lp(rg: NominationGraph) -> tuple[float, np.ndarray]:
    """Minimum max congestion over fractional flows on an active graph.

    Returns (optimal congestion, per-edge flows in _edge_list order).
    """
    edges = _edge_list(rg)
    ne = len(edges)
    voters = [i for i in range(rg.n_agents) if rg.is_voter[i]]
    delegators = [i for i in range(rg.n_agents) if not rg.is_voter[i]]
    if not voters:
        return 0.0, np.zeros(0)
    if not delegators:
        return 1.0, np.zeros(ne)
    didx = {n: r for r, n in enumerate(delegators)}
    vidx = {n: r for r, n in enumerate(voters)}

    # variables: f_e for each edge, then z
    entries = _MatrixEntries()
    for e, (u, _opt, t) in enumerate(edges):
        entries.add(didx[u], e, 1.0)
        if t in didx:
            entries.add(didx[t], e, -1.0)
    a_eq = entries.matrix(len(delegators), ne + 1)
    b_eq = np.ones(len(delegators))

    entries = _MatrixEntries()
    for e, (_u, _opt, t) in enumerate(edges):
        if t in vidx:
            entries.add(vidx[t], e, 1.0)
    for r in range(len(voters)):
        entries.add(r, ne, -1.0)
    a_ub = entries.matrix(len(voters), ne + 1)
    b_ub = -np.ones(len(voters))

    cost = np.zeros(ne + 1)
    cost[ne] = 1.0
    res = linprog(cost, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, method="highs")
    if res.status != 0:
        raise RuntimeError(f"splittable LP failed: {res.message}")
    flows = res.x[:ne]
    z = float(res.x[ne])

    # certificate: conservation and congestion of the returned flow
    inflow = np.zeros(rg.n_agents)
    outflow = np.zeros(rg.n_agents)
    for e, (u, _opt, t) in enumerate(edges):
        outflow[u] += flows[e]
        inflow[t] += flows[e]
    for i in delegators:
        if abs(outflow[i] - 1.0 - inflow[i]) > LP_TOL:
            raise RuntimeError(f"LP solution violates conservation at agent {i}")
    worst = max(1.0 + inflow[v] for v in voters)
    if abs(worst - z) > LP_TOL:
        raise RuntimeError("LP congestion does not match its objective")
    return z, flows


def resolve_splittable(g: NominationGraph) -> SplittableSolution:
    """Optimal splittable relaxation on the active subgraph."""
    tic = time.perf_counter()
    restriction = restrict_to_active(g)
    rg = restriction.graph
    _z, flows = _splittable_lp(rg)
    values = [[0.0] * len(entry) for entry in g.nominations]
    for e, (u, opt, _t) in enumerate(_edge_list(rg)):
        orig_u = restriction.old_of_new[u]
        orig_opt = restriction.kept_options[u][opt]
        values[orig_u][orig_opt] = float(flows[e])
    inflow = [0.0] * g.n_agents
    for u, entry in enumerate(g.nominations):
        for opt, t in enumerate(entry):
            inflow[t] += values[u][opt]
    congestion = {v: 1.0 + inflow[v] for v in range(g.n_agents) if g.is_voter[v]}
    max_congestion = max(congestion.values()) if congestion else 0.0
    return SplittableSolution(
        flow=Flow(tuple(tuple(row) for row in values)),
        congestion=congestion,
        max_congestion=max_congestion,
        wall_time=time.perf_counter() - tic,
    )


# --- exact MILP --------------------------------------------------------------


def _solve_milp(rg: NominationGraph, lower: int, upper: int) -> DelegationAssignment:
    """Exact confluent-congestion MILP on an active graph.

    minimize z subject to flow conservation, voter congestion z >= 1 + in,
    one selected edge per delegator, and the big-M coupling f <= M x that
    zeroes flow on unselected edges. M = min(node count, upper) is valid
    because flow along a chosen path never exceeds its voter's weight.
    """
    edges = _edge_list(rg)
    ne = len(edges)
    voters = [i for i in range(rg.n_agents) if rg.is_voter[i]]
    delegators = [i for i in range(rg.n_agents) if not rg.is_voter[i]]
    didx = {n: r for r, n in enumerate(delegators)}
    vidx = {n: r for r, n in enumerate(voters)}
    n_vars = 2 * ne + 1  # flows, selectors, z
    big_m = float(min(rg.n_agents, upper))

    constraints = []
    entries = _MatrixEntries()  # conservation: out = 1 + in per delegator
    for e, (u, _opt, t) in enumerate(edges):
        entries.add(didx[u], e, 1.0)
        if t in didx:
            entries.add(didx[t], e, -1.0)
    constraints.append(LinearConstraint(entries.matrix(len(delegators), n_vars), 1.0, 1.0))

    entries = _MatrixEntries()  # voter congestion: 1 + in <= z
    for e, (_u, _opt, t) in enumerate(edges):
        if t in vidx:
            entries.add(vidx[t], e, 1.0)
    for r in range(len(voters)):
        entries.add(r, 2 * ne, -1.0)
    constraints.append(LinearConstraint(entries.matrix(len(voters), n_vars), -np.inf, -1.0))

    entries = _MatrixEntries()  # exactly one selected edge per delegator
    for e, (u, _opt, _t) in enumerate(edges):
        entries.add(didx[u], ne + e, 1.0)
    constraints.append(LinearConstraint(entries.matrix(len(delegators), n_vars), 1.0, 1.0))

    entries = _MatrixEntries()  # coupling: f <= M x
    for e in range(ne):
        entries.add(e, e, 1.0)
        entries.add(e, ne + e, -big_m)
    constraints.append(LinearConstraint(entries.matrix(ne, n_vars), -np.inf, 0.0))

    cost = np.zeros(n_vars)
    cost[2 * ne] = 1.0
    integrality = np.zeros(n_vars)
    integrality[ne:] = 1  # selectors binary; z integral since weights are counts
    lo = np.zeros(n_vars)
    hi = np.full(n_vars, big_m)
    hi[ne : 2 * ne] = 1.0
    lo[2 * ne] = float(lower)
    hi[2 * ne] = float(upper)
    res = milp(
        cost,
        constraints=constraints,
        integrality=integrality,
        bounds=Bounds(lo, hi),
        options={"mip_rel_gap": 1e-9},
    )
    if res.status != 0 or res.x is None:
        raise RuntimeError(f"confluent-flow MILP failed: {res.message}")
    flows = res.x[:ne]
    # the selected edge is the one carrying the node's weight (always >= 1)
    choice = [UNUSED] * rg.n_agents
    best_flow = [-1.0] * rg.n_agents
    for e, (u, opt, _t) in enumerate(edges):
        if flows[e] > best_flow[u]:
            best_flow[u] = flows[e]
            choice[u] = opt
    return DelegationAssignment(tuple(choice))


def resolve_optimal(g: NominationGraph) -> ResolutionResult:
    """Minimum achievable maximum voter weight.

    Restricts to the active subgraph, takes greedy and shortest-path
    incumbents for an upper bound, and bounds below by the splittable LP
    and the pigeonhole ratio of nodes to voters. The MILP only runs when
    the bounds do not already meet.
    """
    tic = time.perf_counter()
    restriction = restrict_to_active(g)
    rg = restriction.graph
    delegators = [i for i in range(rg.n_agents) if not rg.is_voter[i]]
    if not delegators:
        return _finish("optimal", g, _trivial_choice(g), tic)

    candidates = []
    for cand in (_greedy_core(rg), shortest_path_assignment(rg)):
        candidates.append((compute_weights(rg, cand).max_weight, cand))
    upper, incumbent = min(candidates, key=lambda pair: pair[0])

    n_voters = sum(rg.is_voter)
    z_lp, _flows = _splittable_lp(rg)
    lower = max(
        -(-rg.n_agents // n_voters),
        math.ceil(z_lp - LP_TOL),
    )
    best = incumbent if upper <= lower else _solve_milp(rg, lower, upper)
    lifted = restriction.lift_assignment(best, g.n_agents)
    return _finish("optimal", g, lifted, tic)


# --- deterministic rounding of the splittable solution ------------------------


def resolve_approx(g: NominationGraph) -> ResolutionResult:
    """Polynomial-time rounding of the optimal splittable flow.

    After cancelling any flow cycles, non-sink nodes are contracted into
    voter groups one at a time (closest to the voters first). Each node
    joins the group where its rerouted outflow raises congestion least,
    materializing the nomination that carried the most flow toward that
    group. The resulting maximum weight stays within the logarithmic
    factor of the optimum that rounding fractional congestion allows.
    """
    tic = time.perf_counter()
    restriction = restrict_to_active(g)
    rg = restriction.graph
    delegators = [i for i in range(rg.n_agents) if not rg.is_voter[i]]
    if not delegators:
        return _finish("approx", g, _trivial_choice(g), tic)
    _z, flows = _splittable_lp(rg)
    choice = _round_confluent(rg, flows)
    lifted = restriction.lift_assignment(choice, g.n_agents)
    return _finish("approx", g, lifted, tic)


def _round_confluent(rg: NominationGraph, flows: np.ndarray) -> DelegationAssignment:
    edges = _edge_list(rg)
    flow = {e: float(flows[e]) for e in range(len(edges)) if flows[e] > LP_TOL}
    out_edges: dict[int, list[int]] = {u: [] for u in range(rg.n_agents)}
    for e, (u, _opt, _t) in enumerate(edges):
        if e in flow:
            out_edges[u].append(e)

    _cancel_cycles(rg, edges, flow, out_edges)

    # order non-sinks so that every positive edge points at an already
    # contracted node: peel nodes whose positive out-edges all lead to
    # voters or peeled nodes, lowest id first
    n = rg.n_agents
    remaining_out = [0] * n
    preds: list[set[int]] = [set() for _ in range(n)]
    for e in flow:
        u, _opt, t = edges[e]
        if not rg.is_voter[t]:
            remaining_out[u] += 1
            preds[t].add(u)
    heap = [u for u in range(n) if not rg.is_voter[u] and remaining_out[u] == 0]
    heapify(heap)
    group = [-1] * n
    congestion: dict[int, float] = {}
    for v in range(n):
        if rg.is_voter[v]:
            group[v] = v
            congestion[v] = 1.0
    for e in flow:
        _u, _opt, t = edges[e]
        if rg.is_voter[t]:
            congestion[t] += flow[e]

    choice = [UNUSED] * n
    processed = [False] * n
    while heap:
        u = heappop(heap)
        if processed[u]:
            continue
        processed[u] = True
        by_group: dict[int, float] = {}
        rep: dict[int, tuple[float, int]] = {}
        out_total = 0.0
        for e in out_edges[u]:
            if e not in flow:
                continue
            val = flow[e]
            _s, opt, t = edges[e]
            gidx = group[t]
            out_total += val
            by_group[gidx] = by_group.get(gidx, 0.0) + val
            if gidx not in rep or (val, -opt) > rep[gidx]:
                rep[gidx] = (val, -opt)
        target_group = min(by_group, key=lambda gi: (congestion[gi] - by_group[gi], gi))
        for gi, moved in by_group.items():
            congestion[gi] -= moved
        congestion[target_group] += out_total
        group[u] = target_group
        choice[u] = -rep[target_group][1]
        for p in preds[u]:
            remaining_out[p] -= 1
            if remaining_out[p] == 0:
                heappush(heap, p)
    return DelegationAssignment(tuple(choice))


def _cancel_cycles(rg, edges, flow, out_edges) -> None:
    """Remove circulation so the positive-flow subgraph becomes acyclic.

    Conservation is preserved: subtracting the bottleneck around a cycle
    changes in and out by the same amount at every node on it.
    """
    n = rg.n_agents
    while True:
        state = [0] * n  # 0 new, 1 on stack, 2 done
        via: dict[int, int] = {}
        cycle_edge = None
        for root in range(n):
            if state[root] or rg.is_voter[root]:
                continue
            stack = [(root, iter(out_edges[root]))]
            state[root] = 1
            while stack and cycle_edge is None:
                node, it = stack[-1]
                advanced = False
                for e in it:
                    if e not in flow:
                        continue
                    t = edges[e][2]
                    if state[t] == 1:
                        cycle_edge = (t, e)
                        advanced = True
                        break
                    if state[t] == 0:
                        via[t] = e
                        state[t] = 1
                        stack.append((t, iter(out_edges[t])))
                        advanced = True
                        break
                if not advanced:
                    state[node] = 2
                    stack.pop()
            if cycle_edge:
                break
        if not cycle_edge:
            return
        # walk the recorded via-edges backwards around the cycle
        start, closing = cycle_edge
        cyc = [closing]
        node = edges[closing][0]
        while node != start:
            e = via[node]
            cyc.append(e)
            node = edges[e][0]
        bottleneck = min(flow[e] for e in cyc)
        for e in cyc:
            flow[e] -= bottleneck
            if flow[e] <= LP_TOL:
                del flow[e]
