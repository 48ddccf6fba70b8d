"""Shared builders for hand-made and randomized test instances."""

from __future__ import annotations

import numpy as np

from voteflow.generator import GeneratorParams, generate
from voteflow.graph import NominationGraph


def make_graph(n: int, voters: set[int], noms: dict[int, list[int]]) -> NominationGraph:
    """Concise constructor: agents 0..n-1, voter set, nominations per delegator."""
    return NominationGraph(
        [i in voters for i in range(n)],
        [noms.get(i, []) for i in range(n)],
    )


def random_cyclic_fixture(rng: np.random.Generator, max_delegators: int = 12) -> NominationGraph:
    """Arbitrary small graph: cycles, dead components, and multi-edges allowed."""
    while True:
        n = int(rng.integers(2, 16))
        is_voter = rng.random(n) < 0.4
        if is_voter.sum() == n:
            is_voter[int(rng.integers(n))] = False
        if (~is_voter).sum() > max_delegators:
            continue
        noms = []
        for i in range(n):
            if is_voter[i]:
                noms.append([])
                continue
            count = int(rng.integers(1, 4))
            targets = []
            for _ in range(count):
                t = int(rng.integers(n - 1))
                targets.append(t if t < i else t + 1)
            noms.append(targets)
        return NominationGraph(is_voter, noms)


def random_generated_prefix(rng: np.random.Generator, max_delegators: int = 12) -> NominationGraph:
    """Small graph from the growth process (acyclic, fully active)."""
    while True:
        t = int(rng.integers(2, 26))
        params = GeneratorParams(
            d=float(rng.uniform(0.2, 0.8)),
            k=int(rng.integers(1, 3)),
            gamma=float(rng.choice([0.0, 1.0])),
            seed=int(rng.integers(2**63)),
        )
        g, _trace = generate(params, t)
        if len(g.delegators) <= max_delegators:
            return g


def random_instance(rng: np.random.Generator, max_delegators: int = 12) -> NominationGraph:
    """Mix of generated prefixes and adversarial cyclic fixtures."""
    if rng.random() < 0.5:
        return random_generated_prefix(rng, max_delegators)
    return random_cyclic_fixture(rng, max_delegators)
