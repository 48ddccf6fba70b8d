"""Nomination graphs, delegation assignments, weights, and flows.

A nomination graph records, for every agent, either the decision to vote
directly (a *voter*, which is a sink) or an ordered list of trusted agents
the vote may be delegated to (a *delegator*). Resolving the graph picks at
most one nomination per delegator so that every materialized delegation
chain ends at a voter; the voter's weight is 1 plus the weights of everyone
delegating to it.

Parallel nominations are kept as distinct list entries, so a delegation
choice is an index into the nomination list rather than a target id.
"""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass
from heapq import heappop, heappush
from typing import Sequence

UNUSED = -1  # choice marker for delegators left outside the delegation subgraph

FLOW_TOL = 1e-6  # tolerance for flow conservation / positivity checks


class InvalidGraphError(ValueError):
    """The nomination graph (or its serialized form) violates an invariant."""


class InvalidAssignmentError(ValueError):
    """A delegation assignment is inconsistent with its graph."""


class InvalidFlowError(ValueError):
    """A flow violates conservation or confluence."""


class NominationGraph:
    """Immutable directed graph of potential delegations.

    Agents are dense ids ``0..n-1``. ``is_voter[i]`` marks sinks; a voter's
    nomination list is empty and a delegator's has at least one entry.
    Self-loops are forbidden. Reverse adjacency is precomputed since weight
    accumulation walks edges forward while reachability walks them backward.
    """

    __slots__ = ("n_agents", "is_voter", "nominations", "incoming")

    def __init__(self, is_voter: Sequence[bool], nominations: Sequence[Sequence[int]]):
        n = len(is_voter)
        if len(nominations) != n:
            raise InvalidGraphError("is_voter and nominations must have equal length")
        self.n_agents = n
        self.is_voter = tuple(bool(v) for v in is_voter)
        noms = []
        for i, lst in enumerate(nominations):
            entry = tuple(int(t) for t in lst)
            if self.is_voter[i]:
                if entry:
                    raise InvalidGraphError(f"voter {i} has nominations")
            elif not entry:
                raise InvalidGraphError(f"delegator {i} has no nominations")
            for t in entry:
                if not 0 <= t < n:
                    raise InvalidGraphError(f"agent {i} nominates out-of-range id {t}")
                if t == i:
                    raise InvalidGraphError(f"agent {i} nominates itself")
            noms.append(entry)
        self.nominations = tuple(noms)
        incoming: list[list[tuple[int, int]]] = [[] for _ in range(n)]
        for i, entry in enumerate(self.nominations):
            for opt, t in enumerate(entry):
                incoming[t].append((i, opt))
        self.incoming = tuple(tuple(e) for e in incoming)

    @property
    def voters(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.n_agents) if self.is_voter[i])

    @property
    def delegators(self) -> tuple[int, ...]:
        return tuple(i for i in range(self.n_agents) if not self.is_voter[i])

    def n_edges(self) -> int:
        return sum(len(e) for e in self.nominations)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, NominationGraph)
            and self.is_voter == other.is_voter
            and self.nominations == other.nominations
        )

    def __hash__(self) -> int:
        return hash((self.is_voter, self.nominations))

    def __repr__(self) -> str:
        return f"NominationGraph(n_agents={self.n_agents}, n_voters={len(self.voters)})"


@dataclass(frozen=True)
class DelegationAssignment:
    """Per-agent resolution: a nomination index, or UNUSED.

    Voters always carry UNUSED. A delegator with a real choice delegates
    along ``nominations[i][choice[i]]``; UNUSED marks votes left on the
    table (delegators that cannot reach any voter).
    """

    choice: tuple[int, ...]

    def resolved(self) -> tuple[int, ...]:
        return tuple(i for i, c in enumerate(self.choice) if c != UNUSED)

    def target(self, g: NominationGraph, i: int) -> int:
        c = self.choice[i]
        if c == UNUSED:
            raise InvalidAssignmentError(f"agent {i} is unresolved")
        return g.nominations[i][c]


@dataclass(frozen=True)
class WeightReport:
    """Voter weights of a resolved graph.

    ``weights`` maps each voter id to its weight; the weights sum to
    ``utilized_votes`` because every node in the delegation subgraph
    contributes exactly its inherent weight of 1.
    """

    weights: dict[int, int]
    max_weight: int
    utilized_votes: int


@dataclass(frozen=True)
class Flow:
    """Nonnegative flow values, one per nomination-list entry per agent."""

    values: tuple[tuple[float, ...], ...]

    def edge(self, agent: int, opt: int) -> float:
        return self.values[agent][opt]


def _check_assignment_shape(g: NominationGraph, a: DelegationAssignment) -> None:
    if len(a.choice) != g.n_agents:
        raise InvalidAssignmentError("assignment length does not match graph")
    for i, c in enumerate(a.choice):
        if c == UNUSED:
            continue
        if g.is_voter[i]:
            raise InvalidAssignmentError(f"voter {i} carries a delegation choice")
        if not 0 <= c < len(g.nominations[i]):
            raise InvalidAssignmentError(f"agent {i} has out-of-range choice {c}")


def active_nodes(g: NominationGraph) -> frozenset[int]:
    """Agents from which some voter is reachable along nomination edges.

    Computed by reverse BFS from the voter set; voters themselves are
    always active. An empty voter set yields an empty result.
    """
    seen = [False] * g.n_agents
    queue = deque()
    for v in range(g.n_agents):
        if g.is_voter[v]:
            seen[v] = True
            queue.append(v)
    while queue:
        node = queue.popleft()
        for src, _opt in g.incoming[node]:
            if not seen[src]:
                seen[src] = True
                queue.append(src)
    return frozenset(i for i in range(g.n_agents) if seen[i])


@dataclass(frozen=True)
class ActiveRestriction:
    """Active subgraph plus the bookkeeping to map results back.

    ``old_of_new[j]`` is the original id of restricted agent ``j``;
    ``new_of_old[i]`` is the restricted id or -1 for inactive agents;
    ``kept_options[j]`` maps each restricted nomination index to the
    original nomination index (entries to inactive targets are dropped,
    order preserved).
    """

    graph: NominationGraph
    old_of_new: tuple[int, ...]
    new_of_old: tuple[int, ...]
    kept_options: tuple[tuple[int, ...], ...]

    def lift_assignment(self, restricted: DelegationAssignment, n_original: int) -> DelegationAssignment:
        """Translate choices on the restricted graph back to original indices."""
        choice = [UNUSED] * n_original
        for j, c in enumerate(restricted.choice):
            if c != UNUSED:
                choice[self.old_of_new[j]] = self.kept_options[j][c]
        return DelegationAssignment(tuple(choice))


def restrict_to_active(g: NominationGraph) -> ActiveRestriction:
    """Induced subgraph on the active nodes, with dense id remapping.

    Every surviving delegator keeps at least one nomination: an active
    delegator has, by definition, a nomination whose target is active.
    """
    active = active_nodes(g)
    old_of_new = tuple(sorted(active))
    new_of_old = [-1] * g.n_agents
    for j, i in enumerate(old_of_new):
        new_of_old[i] = j
    is_voter = [g.is_voter[i] for i in old_of_new]
    noms: list[list[int]] = []
    kept: list[tuple[int, ...]] = []
    for i in old_of_new:
        entry = []
        kept_idx = []
        for opt, t in enumerate(g.nominations[i]):
            if new_of_old[t] != -1:
                entry.append(new_of_old[t])
                kept_idx.append(opt)
        noms.append(entry)
        kept.append(tuple(kept_idx))
    return ActiveRestriction(
        graph=NominationGraph(is_voter, noms),
        old_of_new=old_of_new,
        new_of_old=tuple(new_of_old),
        kept_options=tuple(kept),
    )


def shortest_path_assignment(g: NominationGraph) -> DelegationAssignment:
    """Maximal assignment following BFS-shortest paths toward the voter set.

    Each active delegator picks the first nomination whose target is one
    step closer to a voter; inactive delegators stay UNUSED. The result is
    always a valid delegation subgraph and serves as a feasibility witness.
    """
    INF = g.n_agents + 1
    dist = [INF] * g.n_agents
    queue = deque()
    for v in range(g.n_agents):
        if g.is_voter[v]:
            dist[v] = 0
            queue.append(v)
    while queue:
        node = queue.popleft()
        for src, _opt in g.incoming[node]:
            if dist[src] > dist[node] + 1:
                dist[src] = dist[node] + 1
                queue.append(src)
    choice = [UNUSED] * g.n_agents
    for i in range(g.n_agents):
        if g.is_voter[i] or dist[i] >= INF:
            continue
        best = None
        for opt, t in enumerate(g.nominations[i]):
            if dist[t] < INF and (best is None or dist[t] < dist[g.nominations[i][best]]):
                best = opt
        choice[i] = best
    return DelegationAssignment(tuple(choice))


def compute_weights(g: NominationGraph, a: DelegationAssignment) -> WeightReport:
    """Bottom-up voter weights for a valid assignment.

    Rejects assignments whose chosen edges contain a cycle or whose chosen
    path runs into an unresolved delegator before reaching a voter.
    """
    _check_assignment_shape(g, a)
    n = g.n_agents
    # Walk chosen edges from every resolved delegator; colors: 0 new,
    # 1 on current path, 2 known-good.
    color = [0] * n
    for v in range(n):
        if g.is_voter[v]:
            color[v] = 2
    for start in range(n):
        if color[start] or a.choice[start] == UNUSED:
            continue
        path = []
        node = start
        while color[node] == 0 and a.choice[node] != UNUSED:
            color[node] = 1
            path.append(node)
            node = a.target(g, node)
        if color[node] == 1:
            raise InvalidAssignmentError(f"delegation cycle through agent {node}")
        if color[node] != 2:
            raise InvalidAssignmentError(
                f"agent {path[-1]} delegates to unresolved delegator {node}"
            )
        for p in path:
            color[p] = 2

    weight = [0] * n
    members = [i for i in range(n) if g.is_voter[i] or a.choice[i] != UNUSED]
    for i in members:
        weight[i] = 1
    indeg = [0] * n
    for i in members:
        if a.choice[i] != UNUSED:
            indeg[a.target(g, i)] += 1
    stack = [i for i in members if indeg[i] == 0]
    while stack:
        node = stack.pop()
        if a.choice[node] == UNUSED:
            continue
        t = a.target(g, node)
        weight[t] += weight[node]
        indeg[t] -= 1
        if indeg[t] == 0:
            stack.append(t)

    weights = {v: weight[v] for v in range(n) if g.is_voter[v]}
    max_weight = max(weights.values()) if weights else 0
    return WeightReport(weights=weights, max_weight=max_weight, utilized_votes=len(members))


def delegation_to_flow(g: NominationGraph, a: DelegationAssignment) -> Flow:
    """Flow carrying each delegator's weight along its chosen edge.

    Requires a fully active graph and a maximal assignment; the result
    satisfies conservation and is confluent by construction.
    """
    if len(active_nodes(g)) != g.n_agents:
        raise InvalidFlowError("graph has inactive agents; restrict first")
    for i in range(g.n_agents):
        if not g.is_voter[i] and a.choice[i] == UNUSED:
            raise InvalidFlowError(f"assignment is not maximal: agent {i} unresolved")
    compute_weights(g, a)  # validates acyclicity
    n = g.n_agents
    node_weight = [1] * n
    indeg = [0] * n
    for i in range(n):
        if a.choice[i] != UNUSED:
            indeg[a.target(g, i)] += 1
    stack = [i for i in range(n) if indeg[i] == 0]
    order = []
    while stack:
        node = stack.pop()
        order.append(node)
        if a.choice[node] == UNUSED:
            continue
        t = a.target(g, node)
        indeg[t] -= 1
        if indeg[t] == 0:
            stack.append(t)
    for node in order:
        if a.choice[node] != UNUSED:
            node_weight[a.target(g, node)] += node_weight[node]
    values = []
    for i in range(n):
        row = [0.0] * len(g.nominations[i])
        if a.choice[i] != UNUSED:
            row[a.choice[i]] = float(node_weight[i])
        values.append(tuple(row))
    return Flow(tuple(values))


def flow_to_delegation(g: NominationGraph, f: Flow) -> DelegationAssignment:
    """Assignment selecting each delegator's unique positive-flow edge.

    Rejects flows that are non-confluent (two positive out-edges at one
    node) or that violate conservation ``out = 1 + in`` beyond FLOW_TOL at
    any delegator. Round-trips with :func:`delegation_to_flow`.
    """
    if len(f.values) != g.n_agents:
        raise InvalidFlowError("flow length does not match graph")
    inflow = [0.0] * g.n_agents
    for i, entry in enumerate(g.nominations):
        if len(f.values[i]) != len(entry):
            raise InvalidFlowError(f"flow at agent {i} does not match nomination list")
        for opt, t in enumerate(entry):
            val = f.values[i][opt]
            if val < -FLOW_TOL:
                raise InvalidFlowError(f"negative flow on edge ({i},{t})")
            inflow[t] += val
    choice = [UNUSED] * g.n_agents
    for i in range(g.n_agents):
        if g.is_voter[i]:
            continue
        positive = [opt for opt, val in enumerate(f.values[i]) if val > FLOW_TOL]
        if len(positive) > 1:
            raise InvalidFlowError(f"non-confluent flow: agent {i} has {len(positive)} positive out-edges")
        out = sum(f.values[i])
        if abs(out - (1.0 + inflow[i])) > FLOW_TOL:
            raise InvalidFlowError(
                f"conservation violated at agent {i}: out={out}, in={inflow[i]}"
            )
        choice[i] = positive[0]
    assignment = DelegationAssignment(tuple(choice))
    compute_weights(g, assignment)  # surfaces any residual inconsistency
    return assignment


def scc_reverse_topological(g: NominationGraph) -> list[tuple[int, ...]]:
    """Strongly connected components, voters-first.

    Ordered so that every nomination edge out of the component at position
    ``i`` lands in a component at position ``< i``. Among simultaneously
    available components the one containing the smallest agent id comes
    first, which makes the order (and everything built on it) reproducible.
    """
    n = g.n_agents
    comp = [-1] * n
    comps: list[list[int]] = []
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    counter = 0
    # Iterative Tarjan; graphs can be deep chains so recursion is out.
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, 0)]
        while work:
            node, ei = work[-1]
            if ei == 0:
                index[node] = low[node] = counter
                counter += 1
                stack.append(node)
                on_stack[node] = True
            advanced = False
            noms = g.nominations[node]
            while ei < len(noms):
                t = noms[ei]
                ei += 1
                if index[t] == -1:
                    work[-1] = (node, ei)
                    work.append((t, 0))
                    advanced = True
                    break
                if on_stack[t]:
                    low[node] = min(low[node], index[t])
            if advanced:
                continue
            work.pop()
            if low[node] == index[node]:
                members = []
                while True:
                    m = stack.pop()
                    on_stack[m] = False
                    comp[m] = len(comps)
                    members.append(m)
                    if m == node:
                        break
                comps.append(sorted(members))
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])

    # Kahn over the condensation with edges reversed (targets first); the
    # min-id heap makes the order canonical and, on generated graphs where
    # all edges point backward, identical to arrival order.
    n_comp = len(comps)
    out_remaining = [0] * n_comp
    rev: list[set[int]] = [set() for _ in range(n_comp)]
    out_sets: list[set[int]] = [set() for _ in range(n_comp)]
    for i in range(n):
        for t in g.nominations[i]:
            ci, ct = comp[i], comp[t]
            if ci != ct and ct not in out_sets[ci]:
                out_sets[ci].add(ct)
                rev[ct].add(ci)
    for c in range(n_comp):
        out_remaining[c] = len(out_sets[c])
    heap = sorted((comps[c][0], c) for c in range(n_comp) if out_remaining[c] == 0)
    order: list[tuple[int, ...]] = []
    while heap:
        _key, c = heappop(heap)
        order.append(tuple(comps[c]))
        for pred in rev[c]:
            out_remaining[pred] -= 1
            if out_remaining[pred] == 0:
                heappush(heap, (comps[pred][0], pred))
    return order


# --- JSON graph format -------------------------------------------------------
#
# {"agents": [{"id": 0, "voter": true, "nominations": []},
#             {"id": 1, "voter": false, "nominations": [0, 0]}]}
#
# Nominations are listed in edge order and duplicates are meaningful.


def graph_to_json(g: NominationGraph) -> str:
    agents = [
        {"id": i, "voter": g.is_voter[i], "nominations": list(g.nominations[i])}
        for i in range(g.n_agents)
    ]
    return json.dumps({"agents": agents}, indent=None)


def graph_from_json(text: str) -> NominationGraph:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidGraphError(f"not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "agents" not in doc or not isinstance(doc["agents"], list):
        raise InvalidGraphError('expected an object with an "agents" list')
    n = len(doc["agents"])
    is_voter = [False] * n
    noms: list[list[int]] = [[] for _ in range(n)]
    seen = set()
    for rec in doc["agents"]:
        if not isinstance(rec, dict) or not {"id", "voter", "nominations"} <= rec.keys():
            raise InvalidGraphError("each agent needs id, voter, and nominations fields")
        i = rec["id"]
        if not isinstance(i, int) or not 0 <= i < n or i in seen:
            raise InvalidGraphError(f"agent ids must be unique and dense 0..{n - 1}")
        seen.add(i)
        if not isinstance(rec["voter"], bool):
            raise InvalidGraphError(f"agent {i}: voter flag must be boolean")
        if not isinstance(rec["nominations"], list) or not all(
            isinstance(t, int) for t in rec["nominations"]
        ):
            raise InvalidGraphError(f"agent {i}: nominations must be a list of ids")
        is_voter[i] = rec["voter"]
        noms[i] = rec["nominations"]
    return NominationGraph(is_voter, noms)


def load_graph(path) -> NominationGraph:
    with open(path, "r", encoding="utf-8") as fh:
        return graph_from_json(fh.read())


def save_graph(g: NominationGraph, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(graph_to_json(g))
        fh.write("\n")
