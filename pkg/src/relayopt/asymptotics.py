"""Path/cut censuses, near-zero and near-one heads, and robustness.

Near p = 0 the optimal reliability is governed by the counts of short
s,r-paths; near p = 1 by the number of minimum s,r edge cuts.  Both heads
are read off exactly from the censuses, and the piecewise optimizer's
extreme pieces are checked against them in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import comb

from .engine import bounded_protocol, enumerate_sr_paths, is_finite
from .errors import GuardExceededError, InfiniteProtocolError
from .graphs import Protocol, TwoTerminalGraph
from .reliability import (
    MAX_SCAN_EDGES,
    admits_table,
    connectivity_table,
    spectrum_from_table,
)


@dataclass(frozen=True)
class PathCensus:
    """distance: length of a shortest s,r-path; counts: path count by length."""

    distance: int | None
    counts: dict[int, int]

    def count(self, length: int) -> int:
        return self.counts.get(length, 0)

    @property
    def total(self) -> int:
        return sum(self.counts.values())


@dataclass(frozen=True)
class CutCensus:
    """min_cut: size of a smallest disconnecting edge set; counts[j]: number
    of j-edge sets whose removal disconnects s from r."""

    min_cut: int | None
    counts: dict[int, int]

    def count(self, size: int) -> int:
        return self.counts.get(size, 0)


def path_census(graph: TwoTerminalGraph, max_edges: int = MAX_SCAN_EDGES) -> PathCensus:
    if graph.m > max_edges:
        raise GuardExceededError(f"{graph.m} edges exceeds the census guard of {max_edges}")
    counts: dict[int, int] = {}
    for p in enumerate_sr_paths(graph):
        counts[len(p) - 1] = counts.get(len(p) - 1, 0) + 1
    return PathCensus(min(counts) if counts else None, counts)


def cut_census(graph: TwoTerminalGraph, max_edges: int = MAX_SCAN_EDGES) -> CutCensus:
    """Exhaustive scan: a j-set disconnects iff its complement does not
    connect s to r, so the counts are the complement of the connectivity
    spectrum."""
    m = graph.m
    connected = spectrum_from_table(m, connectivity_table(graph, max_edges))
    counts: dict[int, int] = {}
    for j in range(m + 1):
        c = comb(m, j) - connected[m - j]
        if c:
            counts[j] = c
    return CutCensus(min(counts) if counts else None, counts)


def near_zero_expansion(graph: TwoTerminalGraph, max_edges: int = MAX_SCAN_EDGES):
    """Head data of the optimal reliability near p = 0: the distance k, the
    counts of paths of lengths k and k+1, and the finite protocol of all
    instructions on paths of length at most k+1."""
    census = path_census(graph, max_edges)
    k = census.distance
    if k is None:
        raise ValueError("s and r are disconnected")
    protocol = bounded_protocol(graph, k + 1)
    if not is_finite(protocol):
        raise AssertionError("short-path protocol is not finite")
    return k, census.count(k), census.count(k + 1), protocol


def near_one_expansion(graph: TwoTerminalGraph, max_edges: int = MAX_SCAN_EDGES) -> tuple[int, int]:
    """Head data near p = 1: minimum cut size e and the number of minimum
    cuts, so the optimum is 1 - c_e q^e + O(q^(e+1)) in q = 1 - p."""
    census = cut_census(graph, max_edges)
    if census.min_cut is None:
        raise ValueError("s and r cannot be disconnected by edge removals")
    return census.min_cut, census.count(census.min_cut)


def robustness(protocol: Protocol, max_edges: int = MAX_SCAN_EDGES) -> int:
    """Largest k such that every failure of at most k edges that leaves s,r
    connected still admits a protocol walk; requires a finite protocol."""
    if not is_finite(protocol):
        raise InfiniteProtocolError("infinite protocol")
    graph = protocol.graph
    m = graph.m
    connected = connectivity_table(graph, max_edges)
    admits = admits_table(protocol, max_edges)
    worst = m + 1
    for S in range(1 << m):
        if connected[S] and not admits[S]:
            failed = m - S.bit_count()
            if failed < worst:
                worst = failed
    return m if worst > m else worst - 1
