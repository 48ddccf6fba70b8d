"""Sequential random growth of nomination graphs.

Agents arrive one at a time. The first agent votes; every later agent
delegates with probability ``d`` and otherwise votes. A delegator draws its
nomination targets i.i.d. among the previously inserted agents, where agent
``j`` is drawn with probability proportional to ``(indegree(j) + 1) ** gamma``
(indegree counts received nominations with multiplicity, frozen while one
agent draws and updated after the full insertion). Duplicate targets are
allowed, so the same pair of agents can be connected by parallel edges.

Because every nomination points to an earlier agent and agent 0 is a voter,
generated graphs are acyclic and fully active.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .graph import InvalidGraphError, NominationGraph


@dataclass(frozen=True)
class GeneratorParams:
    """Knobs of the growth process.

    d: probability that a new agent delegates, strictly between 0 and 1.
    k: nominations per delegator.
    gamma: indegree-bias exponent; 0 means uniform target choice.
    voter_bias: bias voters by (indegree + 2) ** gamma instead, mirroring
        the self-loop view of classical preferential attachment.
    p_two: if set, each delegator issues 2 nominations with probability
        p_two and 1 otherwise, overriding k.
    seed: RNG seed; generation is deterministic per (params, t).
    """

    d: float
    k: int = 1
    gamma: float = 0.0
    voter_bias: bool = False
    p_two: float | None = None
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.d < 1.0:
            raise ValueError(f"d must lie strictly in (0, 1), got {self.d}")
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if self.gamma < 0.0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if self.p_two is not None and not 0.0 <= self.p_two <= 1.0:
            raise ValueError(f"p_two must lie in [0, 1], got {self.p_two}")


@dataclass(frozen=True)
class ArrivalTrace:
    """Insertion-order record: None for a voter, target tuple for a delegator.

    The first event is always a voter and every target of the event at
    position ``i`` references an agent with id below ``i``.
    """

    events: tuple[tuple[int, ...] | None, ...]

    def __post_init__(self):
        if not self.events:
            raise InvalidGraphError("trace must contain at least one event")
        if self.events[0] is not None:
            raise InvalidGraphError("first trace event must be a voter")
        for i, ev in enumerate(self.events):
            if ev is None:
                continue
            if not ev:
                raise InvalidGraphError(f"delegator event {i} has no targets")
            for t in ev:
                if not 0 <= t < i:
                    raise InvalidGraphError(
                        f"event {i} references agent {t} not inserted before it"
                    )

    def __len__(self) -> int:
        return len(self.events)

    def prefix(self, t: int) -> "ArrivalTrace":
        if not 1 <= t <= len(self.events):
            raise ValueError(f"prefix length {t} out of range")
        return ArrivalTrace(self.events[:t])


def graph_from_trace(trace: ArrivalTrace, t: int | None = None) -> NominationGraph:
    """Nomination graph of the first ``t`` events (all of them by default)."""
    events = trace.events if t is None else trace.events[:t]
    is_voter = [ev is None for ev in events]
    noms = [list(ev) if ev is not None else [] for ev in events]
    return NominationGraph(is_voter, noms)


class _Fenwick:
    """Prefix-sum tree used for weighted target sampling in O(log n)."""

    def __init__(self, n: int):
        self.n = n
        self.tree = [0.0] * (n + 1)

    def add(self, i: int, delta: float) -> None:
        i += 1
        while i <= self.n:
            self.tree[i] += delta
            i += i & (-i)

    def prefix(self, i: int) -> float:
        i += 1
        s = 0.0
        while i > 0:
            s += self.tree[i]
            i -= i & (-i)
        return s

    def search(self, value: float) -> int:
        """Smallest index whose cumulative sum exceeds ``value``."""
        idx = 0
        bit = 1 << (self.n.bit_length())
        while bit > 0:
            nxt = idx + bit
            if nxt <= self.n and self.tree[nxt] <= value:
                value -= self.tree[nxt]
                idx = nxt
            bit >>= 1
        return idx  # 0-based since idx counts fully-consumed prefix


def generate(params: GeneratorParams, t: int) -> tuple[NominationGraph, ArrivalTrace]:
    """Grow a graph with ``t`` agents; returns it with its arrival trace."""
    if t < 1:
        raise ValueError(f"t must be >= 1, got {t}")
    rng = np.random.default_rng(params.seed)
    events: list[tuple[int, ...] | None] = [None]
    indeg = np.zeros(t, dtype=np.int64)

    uniform = params.gamma == 0.0  # bias exponent 0 makes every weight 1
    if not uniform:
        fen = _Fenwick(t)
        fen.add(0, _bias_weight(params, indeg[0], True))
    is_voter_so_far = [True]

    for i in range(1, t):
        if rng.random() >= params.d:
            events.append(None)
            is_voter_so_far.append(True)
            if not uniform:
                fen.add(i, _bias_weight(params, 0, True))
            continue

        if params.p_two is None:
            n_noms = params.k
        elif params.p_two == 0.0:
            n_noms = 1
        elif params.p_two == 1.0:
            n_noms = 2
        else:
            n_noms = 2 if rng.random() < params.p_two else 1

        if uniform:
            targets = tuple(int(x) for x in rng.integers(0, i, size=n_noms))
        else:
            total = fen.prefix(i - 1)
            # min() guards against the cumulative search overshooting by a
            # rounding error when the draw lands at the very top of the range
            targets = tuple(
                min(fen.search(rng.random() * total), i - 1) for _ in range(n_noms)
            )
        events.append(targets)
        is_voter_so_far.append(False)
        if not uniform:
            fen.add(i, _bias_weight(params, 0, False))
            for tgt in targets:
                indeg[tgt] += 1
                fen.add(
                    tgt,
                    _bias_weight(params, indeg[tgt], is_voter_so_far[tgt])
                    - _bias_weight(params, indeg[tgt] - 1, is_voter_so_far[tgt]),
                )
        else:
            for tgt in targets:
                indeg[tgt] += 1

    trace = ArrivalTrace(tuple(events))
    return graph_from_trace(trace), trace


def _bias_weight(params: GeneratorParams, indegree: int, is_voter: bool) -> float:
    base = indegree + (2 if (params.voter_bias and is_voter) else 1)
    return float(base) ** params.gamma


def identical_pair_fraction(g: NominationGraph) -> float:
    """Fraction of delegators whose two nomination targets coincide.

    Only defined for graphs where every delegator issued exactly two
    nominations; a graph without delegators yields 0.0.
    """
    n_deleg = 0
    n_same = 0
    for i in range(g.n_agents):
        if g.is_voter[i]:
            continue
        entry = g.nominations[i]
        if len(entry) != 2:
            raise ValueError(f"delegator {i} has {len(entry)} nominations, expected 2")
        n_deleg += 1
        if entry[0] == entry[1]:
            n_same += 1
    return n_same / n_deleg if n_deleg else 0.0


# --- trace sidecar format ----------------------------------------------------
#
# One event per line: "V" for a voter, "D id1 id2 ..." for a delegator.


def trace_to_lines(trace: ArrivalTrace) -> Iterable[str]:
    for ev in trace.events:
        yield "V" if ev is None else "D " + " ".join(str(t) for t in ev)


def trace_from_lines(lines: Iterable[str]) -> ArrivalTrace:
    events: list[tuple[int, ...] | None] = []
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "V" and len(parts) == 1:
            events.append(None)
        elif parts[0] == "D" and len(parts) > 1:
            events.append(tuple(int(p) for p in parts[1:]))
        else:
            raise InvalidGraphError(f"bad trace line {lineno}: {raw!r}")
    return ArrivalTrace(tuple(events))


def save_trace(trace: ArrivalTrace, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for line in trace_to_lines(trace):
            fh.write(line)
            fh.write("\n")


def load_trace(path) -> ArrivalTrace:
    with open(path, "r", encoding="utf-8") as fh:
        return trace_from_lines(fh)
