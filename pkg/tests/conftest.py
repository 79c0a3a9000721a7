"""Shared fixtures, randomized generators and independent test oracles."""

from __future__ import annotations

import random

import pytest

from relayopt import (
    GraphError,
    Protocol,
    TwoTerminalGraph,
    b0,
    cfp,
    edge,
    instructions_in,
    parallel,
    series,
)
from relayopt.constructions import SPTree


@pytest.fixture(scope="session")
def b0_graph() -> TwoTerminalGraph:
    return b0()


@pytest.fixture(scope="session")
def b0_cfp(b0_graph) -> Protocol:
    return cfp(b0_graph)


def random_connected_graph(rng: random.Random, max_extra: int = 4, max_edges: int = 8) -> TwoTerminalGraph:
    """Random simple graph on s, r and a few extra vertices with s,r in one
    component."""
    while True:
        n = rng.randint(1, max_extra)
        verts = ["s", "r"] + [f"v{i}" for i in range(n)]
        pairs = [(a, b) for i, a in enumerate(verts) for b in verts[i + 1:]]
        rng.shuffle(pairs)
        budget = rng.randint(len(verts) - 1, max_edges)
        graph = TwoTerminalGraph(verts, pairs[:budget], "s", "r")
        if "r" in graph.distances_from("s"):
            return graph


def random_sptree(rng: random.Random, budget: int, depth: int = 0) -> SPTree:
    """Random construction tree with at most ``budget`` edges."""
    if budget <= 1 or (depth >= 2 and rng.random() < 0.45):
        return edge()
    left_budget = rng.randint(1, budget - 1)
    left = random_sptree(rng, left_budget, depth + 1)
    right = random_sptree(rng, budget - left_budget, depth + 1)
    if rng.random() < 0.5:
        try:
            return parallel(left, right)
        except GraphError:
            return series(left, right)
    return series(left, right)


def brute_force_walks(protocol: Protocol, cap_edges: int) -> list[tuple[str, ...]]:
    """Independent walk enumeration straight from the definitions: extend
    vertex sequences, requiring every interior triple to be a protocol
    instruction, up to the length cap."""
    graph = protocol.graph
    ins = protocol.instructions
    found: list[tuple[str, ...]] = []

    def extend(seq: list[str]) -> None:
        if len(seq) - 1 > cap_edges:
            return
        v = seq[-1]
        if v == graph.r:
            found.append(tuple(seq))
        for w in graph.neighbors(v):
            if len(seq) >= 2 and (seq[-2], v, w) not in ins:
                continue
            seq.append(w)
            extend(seq)
            seq.pop()

    extend([graph.s])
    return found


def contains_instruction_set(path: tuple[str, ...], protocol: Protocol) -> bool:
    return all(i in protocol.instructions for i in instructions_in(path))


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    status = "PASS" if report.passed else "FAIL"
    print(f"\n[acceptance] {name}: {status}", flush=True)
