"""Monte Carlo cross-validation of the exact reliabilities.

Edge survival is sampled from a counter-based generator: one keyed BLAKE2b
digest per (seed, trial index), four bytes per edge.  Trials are therefore
independent of evaluation order, so parallel execution and re-runs with
the same seed reproduce reports byte for byte.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from fractions import Fraction

from .engine import StateGraph, a_walks, is_finite
from .errors import GuardExceededError, InfiniteProtocolError
from .graphs import EdgeProbabilityMap, Protocol, edge_key
from .polys import Poly
from .reliability import MAX_SCAN_EDGES, admits_table, edge_bits

COPY_CAP = 10 ** 6
_CHUNK = 4  # bytes of hash output per edge
_SCALE = 1 << (8 * _CHUNK)


@dataclass(frozen=True)
class TrialReport:
    trials: int
    deliveries: int
    estimate: Fraction
    stderr: float
    copies: dict[int, int] | None = None

    def to_json(self) -> dict:
        obj = {
            "trials": self.trials,
            "deliveries": self.deliveries,
            "estimate": str(self.estimate),
            "stderr": self.stderr,
        }
        if self.copies is not None:
            obj["copies"] = {str(k): v for k, v in sorted(self.copies.items())}
        return obj


def _sample_masks(m: int, p0: Fraction, trials: int, seed: int):
    """Yield one surviving-edge bitmask per trial."""
    threshold = (p0.numerator * _SCALE) // p0.denominator
    key = seed.to_bytes(8, "big", signed=True)
    per_digest = 64 // _CHUNK
    blocks = (m + per_digest - 1) // per_digest
    for t in range(trials):
        digest = b""
        for blk in range(blocks):
            h = hashlib.blake2b(t.to_bytes(8, "big") + blk.to_bytes(2, "big"), key=key, digest_size=64)
            digest += h.digest()
        mask = 0
        for j in range(m):
            word = int.from_bytes(digest[_CHUNK * j:_CHUNK * (j + 1)], "big")
            if word < threshold:
                mask |= 1 << j
        yield mask


def _copies_table(protocol: Protocol, max_copies: int) -> list[int]:
    """Number of surviving walks (state paths from an initial to an
    accepting state) for every edge subset; finite protocols only."""
    sg = StateGraph(protocol)
    bits = edge_bits(protocol.graph)
    ebit = [bits[edge_key(u, v)] for u, v in sg.states]
    m = protocol.graph.m
    acc = sg.accepting
    table = [0] * (1 << m)
    for S in range(1 << m):
        memo: dict[int, int] = {}

        def count(i: int) -> int:
            got = memo.get(i)
            if got is not None:
                return got
            memo[i] = 0  # cycles through non-useful states contribute nothing
            total = 1 if i in acc else 0
            for j in sg.out[i]:
                if ebit[j] & S:
                    total += count(j)
            memo[i] = total
            return total

        total = 0
        for i in sg.initial:
            if ebit[i] & S:
                total += count(i)
        if total > max_copies:
            raise GuardExceededError(f"more than {max_copies} surviving walks in one trial")
        table[S] = total
    return table


def simulate(
    protocol: Protocol,
    p0: Fraction,
    trials: int,
    seed: int,
    count_copies: bool = False,
    max_copies: int = COPY_CAP,
    max_edges: int = MAX_SCAN_EDGES,
) -> TrialReport:
    """Estimate delivery probability by sampling edge failures; optionally
    histogram the number of message copies the receiver gets per trial."""
    if not 0 < p0 < 1:
        raise ValueError("edge survival probability must lie in (0,1)")
    if count_copies and not is_finite(protocol):
        raise InfiniteProtocolError("copy counting needs a finite protocol")
    graph = protocol.graph
    table = admits_table(protocol, max_edges)
    copies_table = _copies_table(protocol, max_copies) if count_copies else None
    deliveries = 0
    histogram: dict[int, int] = {}
    for mask in _sample_masks(graph.m, p0, trials, seed):
        if table[mask]:
            deliveries += 1
        if copies_table is not None:
            c = copies_table[mask]
            histogram[c] = histogram.get(c, 0) + 1
    estimate = Fraction(deliveries, trials) if trials else Fraction(0)
    stderr = math.sqrt(float(estimate * (1 - estimate)) / trials) if trials else 0.0
    return TrialReport(trials, deliveries, estimate, stderr, histogram if count_copies else None)


def expected_copies(protocol: Protocol, probmap: EdgeProbabilityMap | None = None) -> Poly:
    """Exact expected number of copies delivered: the sum over protocol
    walks of the survival probability of the walk's (distinct) edges."""
    if probmap is None:
        probmap = EdgeProbabilityMap.constant_p(protocol.graph)
    total = Poly.zero()
    for walk in a_walks(protocol):
        term = Poly.one()
        for e in {edge_key(walk[i], walk[i + 1]) for i in range(len(walk) - 1)}:
            term = term * probmap.poly_for_edge(e)
        total = total + term
    return total
