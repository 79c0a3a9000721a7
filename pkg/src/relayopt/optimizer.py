"""Optimal finite protocols, discrepancies and the piecewise upper envelope.

The optimum over finite protocols is always attained on a maximal finite
subset of the CFP, so the candidate space is the complements of minimal
removal sets.  Candidate removals are drawn from the instructions lying on
at least one essential circuit: for any finite protocol F, removing the
circuit-borne instructions that are not essential for F leaves a finite
protocol at least as reliable as F, so restricting to circuit-borne
removals never loses the optimum.
"""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .engine import (
    StateGraph,
    cfp,
    enumerate_sr_paths,
    instructions_in,
    is_finite,
    spfp_reduce,
)
from .errors import GuardExceededError, InstructionError, RelayoptError
from .graphs import (
    EdgeProbabilityMap,
    Instruction,
    Protocol,
    TwoTerminalGraph,
    edge_key,
)
from .polys import Poly, poly_gcd
from .reliability import (
    MAX_SCAN_EDGES,
    edge_bits,
    monotone_table,
    polynomial_from_table,
    rho,
    rho_A,
)
from .roots import (
    AlgebraicNumber,
    count_roots,
    isolate_roots_01,
    multiplicity_at,
    rational_between,
    sturm_chain,
    yun_decomposition,
)

RemovalSet = frozenset[Instruction]

MAX_REMOVAL_TESTS = 1 << 20
BRUTE_FORCE_CFP_LIMIT = 22
OUTPUT_INTERVAL_WIDTH = Fraction(1, 1 << 20)


def _removal_sort_key(removal: RemovalSet) -> tuple:
    return tuple(sorted(removal))


# ---------------------------------------------------------------------------
# Discrepancy
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DiscrepancyReport:
    removed: RemovalSet
    polynomial: Poly
    finite: bool


class _TrailReachability:
    """Subset-restricted existence of an s,r-trail avoiding a removal set.

    Trails may turn around on an edge (the turn triple is not an
    instruction, so it can never be in the removal set) and may use
    instructions outside the CFP; only the removed instructions are
    forbidden."""

    __slots__ = ("ebit", "out", "initial", "accepting_mask")

    def __init__(self, graph: TwoTerminalGraph, removed: RemovalSet):
        states = []
        for u, v in sorted(graph.edges):
            states.append((u, v))
            states.append((v, u))
        states.sort()
        index = {st: i for i, st in enumerate(states)}
        bits = edge_bits(graph)
        self.ebit = [bits[edge_key(u, v)] for u, v in states]
        out = []
        for u, v in states:
            row = []
            for w in graph.neighbors(v):
                if w != u and Instruction(u, v, w) in removed:
                    continue
                row.append(index[(v, w)])
            out.append(tuple(row))
        self.out = out
        self.initial = tuple(index[(graph.s, x)] for x in graph.neighbors(graph.s))
        acc = 0
        for y in graph.neighbors(graph.r):
            acc |= 1 << index[(y, graph.r)]
        self.accepting_mask = acc

    def test(self, S: int) -> bool:
        ebit = self.ebit
        out = self.out
        acc = self.accepting_mask
        seen = 0
        stack = []
        for i in self.initial:
            if ebit[i] & S:
                b = 1 << i
                if acc & b:
                    return True
                if not seen & b:
                    seen |= b
                    stack.append(i)
        while stack:
            i = stack.pop()
            for j in out[i]:
                b = 1 << j
                if seen & b or not ebit[j] & S:
                    continue
                if acc & b:
                    return True
                seen |= b
                stack.append(j)
        return False


def _removal_event_polynomial(
    graph: TwoTerminalGraph,
    removed: RemovalSet,
    probmap: EdgeProbabilityMap | None,
    threads: int | None,
    max_edges: int,
) -> Poly:
    """Probability that some s,r-path using a removed instruction survives
    while every s,r-trail avoiding the removed instructions loses an edge."""
    m = graph.m
    bits = edge_bits(graph)
    masks = set()
    for p in enumerate_sr_paths(graph):
        if any(i in removed for i in instructions_in(p)):
            mask = 0
            for i in range(len(p) - 1):
                mask |= bits[edge_key(p[i], p[i + 1])]
            masks.add(mask)
    used_table = monotone_table(m, lambda S: S in masks)
    trail_table = monotone_table(m, _TrailReachability(graph, removed).test)
    event = bytearray(1 << m)
    for S in range(1 << m):
        event[S] = 1 if used_table[S] and not trail_table[S] else 0
    return polynomial_from_table(graph, probmap, event, threads)


def discrepancy(
    graph: TwoTerminalGraph,
    removed: Iterable[tuple[str, str, str]],
    probmap: EdgeProbabilityMap | None = None,
    check_event: bool = False,
    threads: int | None = None,
    max_edges: int = MAX_SCAN_EDGES,
) -> DiscrepancyReport:
    """Reliability lost by deleting the given instructions from the CFP."""
    astar = cfp(graph)
    removal = frozenset(Instruction(*i) for i in removed)
    bad = removal - astar.instructions
    if bad:
        worst = "".join(sorted(bad)[0])
        raise InstructionError(f"{worst} is not a CFP instruction", code="not-in-cfp")
    base = rho_A(astar, probmap, threads, max_edges)
    reduced = astar.minus(removal)
    d = base - rho_A(reduced, probmap, threads, max_edges)
    if check_event:
        event = _removal_event_polynomial(graph, removal, probmap, threads, max_edges)
        if event != d:
            raise AssertionError(
                f"event probability {event!r} differs from discrepancy {d!r}"
            )
    return DiscrepancyReport(removal, d, is_finite(reduced))


# ---------------------------------------------------------------------------
# Minimal removal sets
# ---------------------------------------------------------------------------

def _strongly_connected_components(nodes: Sequence[int], adj: dict[int, list[int]]) -> dict[int, int]:
    visited: set[int] = set()
    order: list[int] = []
    for root in nodes:
        if root in visited:
            continue
        visited.add(root)
        stack: list[tuple[int, list[int], int]] = [(root, adj.get(root, []), 0)]
        while stack:
            v, succs, k = stack[-1]
            advanced = False
            while k < len(succs):
                w = succs[k]
                k += 1
                if w not in visited:
                    visited.add(w)
                    stack[-1] = (v, succs, k)
                    stack.append((w, adj.get(w, []), 0))
                    advanced = True
                    break
            if not advanced:
                order.append(v)
                stack.pop()
    radj: dict[int, list[int]] = {}
    for v, succs in adj.items():
        for w in succs:
            radj.setdefault(w, []).append(v)
    comp: dict[int, int] = {}
    c = 0
    for v in reversed(order):
        if v in comp:
            continue
        comp[v] = c
        stack2 = [v]
        while stack2:
            u = stack2.pop()
            for w in radj.get(u, ()):
                if w not in comp:
                    comp[w] = c
                    stack2.append(w)
        c += 1
    return comp


def circuit_instructions(graph: TwoTerminalGraph) -> list[Instruction]:
    """CFP instructions lying on at least one essential circuit: the
    essential transitions inside a strongly connected component."""
    astar = cfp(graph)
    sg = StateGraph(astar)
    ess = sg.essential_transitions()
    adj: dict[int, list[int]] = {}
    nodes: set[int] = set()
    for i, j in ess:
        adj.setdefault(i, []).append(j)
        nodes.add(i)
        nodes.add(j)
    comp = _strongly_connected_components(sorted(nodes), adj)
    out = [sg.instruction_of(i, j) for i, j in ess if comp[i] == comp[j]]
    return sorted(out)


def _minimal_removal_family(
    astar: Protocol,
    candidates: Sequence[Instruction],
    max_tests: int,
) -> list[RemovalSet]:
    """All inclusion-minimal subsets of the candidates whose removal leaves
    the CFP finite, by increasing-size search with finiteness re-checked
    after every removal (essentiality shifts as instructions disappear)."""
    if is_finite(astar):
        return [frozenset()]
    found: list[RemovalSet] = []
    tests = 0
    for size in range(1, len(candidates) + 1):
        saw_open = False
        for combo in itertools.combinations(candidates, size):
            cset = frozenset(combo)
            if any(f <= cset for f in found):
                continue
            saw_open = True
            tests += 1
            if tests > max_tests:
                raise GuardExceededError(f"removal search exceeded {max_tests} finiteness tests")
            if is_finite(astar.minus(cset)):
                found.append(cset)
        if not saw_open:
            break
    return sorted(found, key=_removal_sort_key)


def minimal_removal_sets(
    graph: TwoTerminalGraph,
    max_tests: int = MAX_REMOVAL_TESTS,
) -> list[RemovalSet]:
    """Minimal circuit-borne removal sets making the CFP finite.  Removing
    every circuit-borne instruction always succeeds, so the family is
    nonempty; for a finite CFP it is the single empty set."""
    astar = cfp(graph)
    return _minimal_removal_family(astar, circuit_instructions(graph), max_tests)


# ---------------------------------------------------------------------------
# Optimal reliability
# ---------------------------------------------------------------------------

_CANDIDATE_CACHE: dict = {}


def candidate_polynomials(
    graph: TwoTerminalGraph,
    probmap: EdgeProbabilityMap | None = None,
    threads: int | None = None,
    max_edges: int = MAX_SCAN_EDGES,
    max_tests: int = MAX_REMOVAL_TESTS,
) -> list[tuple[RemovalSet, Poly]]:
    """Reliability polynomial of every maximal-finite-candidate protocol,
    with identical polynomials collapsed to the lexicographically least
    removal witness.  Results are cached per (graph, probabilities)."""
    key = (graph, None if probmap is None else probmap, max_edges)
    cached = _CANDIDATE_CACHE.get(key)
    if cached is not None:
        return list(cached)
    astar = cfp(graph)
    best: dict[Poly, RemovalSet] = {}
    for removal in minimal_removal_sets(graph, max_tests):
        poly = rho_A(astar.minus(removal), probmap, threads, max_edges)
        cur = best.get(poly)
        if cur is None or _removal_sort_key(removal) < _removal_sort_key(cur):
            best[poly] = removal
    result = sorted(((rem, poly) for poly, rem in best.items()), key=lambda t: _removal_sort_key(t[0]))
    if len(_CANDIDATE_CACHE) > 64:
        _CANDIDATE_CACHE.clear()
    _CANDIDATE_CACHE[key] = result
    return list(result)


def rho_hat_at(
    graph: TwoTerminalGraph,
    probmap: EdgeProbabilityMap | None = None,
    at: Fraction | None = None,
    threads: int | None = None,
    max_edges: int = MAX_SCAN_EDGES,
):
    """Optimal reliability over finite protocols.

    With ``at`` given, returns the exact pointwise maximum at that rational
    together with the witnessing removal set.  Without ``at``, the result
    must be a single polynomial on all of (0,1); if the optimum switches
    pieces, a domain error directs the caller to rho_hat_piecewise.
    """
    cands = candidate_polynomials(graph, probmap, threads, max_edges)
    if at is not None:
        best_val: Fraction | None = None
        best_rem: RemovalSet | None = None
        for rem, poly in cands:
            val = poly(at)
            if best_val is None or val > best_val:
                best_val, best_rem = val, rem
        return best_val, best_rem
    pw = _upper_envelope(cands)
    if len(pw.pieces) > 1:
        raise RelayoptError(
            "optimal reliability is piecewise; use rho_hat_piecewise",
            code="piecewise-result",
        )
    piece = pw.pieces[0]
    return piece.poly, piece.removed


_ORACLE_CACHE: dict = {}


def brute_force_rho_hat(
    graph: TwoTerminalGraph,
    p0: Fraction,
    probmap: EdgeProbabilityMap | None = None,
    max_tests: int = MAX_REMOVAL_TESTS,
) -> Fraction:
    """Test oracle: maximum reliability at p0 over every finite subset of
    the CFP.  Walk survival is monotone in the instruction set, so the
    maximum is attained on a maximal finite subset; those are enumerated by
    an increasing-size search over removals from the full instruction set,
    with no circuit analysis involved."""
    astar = cfp(graph)
    if len(astar) > BRUTE_FORCE_CFP_LIMIT:
        raise GuardExceededError(
            f"CFP has {len(astar)} instructions; oracle guard is {BRUTE_FORCE_CFP_LIMIT}"
        )
    removals = _ORACLE_CACHE.get(astar)
    if removals is None:
        removals = _minimal_removal_family(astar, sorted(astar.instructions), max_tests)
        if len(_ORACLE_CACHE) > 16:
            _ORACLE_CACHE.clear()
        _ORACLE_CACHE[astar] = removals
    best: Fraction | None = None
    for removal in removals:
        val = rho_A(astar.minus(removal), probmap)(p0)
        if best is None or val > best:
            best = val
    return best


# ---------------------------------------------------------------------------
# Piecewise envelope
# ---------------------------------------------------------------------------

@dataclass
class Breakpoint:
    """Envelope switch point: the unique root of ``root.poly`` in its
    isolating interval; ``order`` is the vanishing order of the difference
    of the two adjacent pieces (odd by envelope geometry)."""

    root: AlgebraicNumber
    order: int


@dataclass
class Piece:
    poly: Poly
    removed: RemovalSet


@dataclass
class PiecewiseReliability:
    """Breakpoints in (0,1) and the polynomial + witness on each interval."""

    pieces: list[Piece]
    breakpoints: list[Breakpoint]

    def polynomial_at(self, p0: Fraction) -> Poly:
        return self.pieces[self._piece_index(p0)].poly

    def witness_at(self, p0: Fraction) -> RemovalSet:
        return self.pieces[self._piece_index(p0)].removed

    def value_at(self, p0: Fraction) -> Fraction:
        return self.polynomial_at(p0)(p0)

    def _piece_index(self, p0: Fraction) -> int:
        if not 0 < p0 < 1:
            raise ValueError("argument must lie in (0,1)")
        idx = 0
        for bp in self.breakpoints:
            if bp.root.compare_rational(p0) < 0:
                idx += 1
            else:
                break
        return idx

    @property
    def leftmost(self) -> Piece:
        return self.pieces[0]

    @property
    def rightmost(self) -> Piece:
        return self.pieces[-1]

    def single(self) -> Poly:
        if len(self.pieces) != 1:
            raise RelayoptError("function has multiple pieces", code="piecewise-result")
        return self.pieces[0].poly

    def map_pieces(self, fn) -> PiecewiseReliability:
        return PiecewiseReliability(
            [Piece(fn(p.poly), p.removed) for p in self.pieces],
            self.breakpoints,
        )


def _sorted_unique_points(points: list[AlgebraicNumber]) -> list[AlgebraicNumber]:
    unique: list[AlgebraicNumber] = []
    for pt in points:
        if not any(pt.compare(q) == 0 for q in unique):
            unique.append(pt)
    unique.sort(key=functools.cmp_to_key(lambda a, b: a.compare(b)))
    return unique


def _upper_envelope(cands: list[tuple[RemovalSet, Poly]]) -> PiecewiseReliability:
    if not cands:
        raise ValueError("no candidates")
    if len(cands) == 1:
        rem, poly = cands[0]
        return PiecewiseReliability([Piece(poly, rem)], [])
    points: list[AlgebraicNumber] = []
    for (_, pa), (_, pb) in itertools.combinations(cands, 2):
        points.extend(isolate_roots_01(pa - pb))
    points = _sorted_unique_points(points)
    bounds: list = [Fraction(0), *points, Fraction(1)]
    samples = [rational_between(bounds[i], bounds[i + 1]) for i in range(len(bounds) - 1)]
    winners: list[int] = []
    for q in samples:
        vals = [poly(q) for _, poly in cands]
        winners.append(max(range(len(cands)), key=lambda k: (vals[k], )))
    pieces: list[Piece] = []
    breakpoints: list[Breakpoint] = []
    run_start = 0
    for i in range(1, len(winners) + 1):
        if i < len(winners) and cands[winners[i]][1] == cands[winners[run_start]][1]:
            continue
        rem, poly = cands[winners[run_start]]
        pieces.append(Piece(poly, rem))
        if i < len(winners):
            root = points[i - 1]
            diff = poly - cands[winners[i]][1]
            order = multiplicity_at(diff, root)
            if order % 2 == 0:
                raise AssertionError("envelope switch with even vanishing order")
            defining = _defining_factor(diff, root, order)
            breakpoints.append(Breakpoint(AlgebraicNumber(defining, root.lo, root.hi, root.exact), order))
        run_start = i
    return PiecewiseReliability(pieces, breakpoints)


def _defining_factor(diff: Poly, root: AlgebraicNumber, order: int) -> Poly:
    """Square-free factor of ``diff`` vanishing at the root, refined so the
    stored interval isolates the root within that factor."""
    if root.exact is not None:
        return Poly((-root.exact, 1))
    for factor, mult in yun_decomposition(diff):
        if mult != order:
            continue
        h = poly_gcd(factor, root.poly)
        if h.degree < 1:
            continue
        if h(root.lo) != 0 and h(root.hi) != 0 and count_roots(sturm_chain(h), root.lo, root.hi) >= 1:
            chain = sturm_chain(factor)
            while count_roots(chain, root.lo, root.hi) != 1:
                root.refine_once()
                if root.exact is not None:
                    return Poly((-root.exact, 1))
            return factor
    raise AssertionError("no square-free factor matches the breakpoint")


def rho_hat_piecewise(
    graph: TwoTerminalGraph,
    probmap: EdgeProbabilityMap | None = None,
    threads: int | None = None,
    max_edges: int = MAX_SCAN_EDGES,
) -> PiecewiseReliability:
    """Optimal reliability as an exact piecewise polynomial on (0,1): the
    upper envelope of the candidate polynomials, with breakpoints located
    by exact root isolation of pairwise differences."""
    return _upper_envelope(candidate_polynomials(graph, probmap, threads, max_edges))


def min_discrepancy(
    graph: TwoTerminalGraph,
    probmap: EdgeProbabilityMap | None = None,
    threads: int | None = None,
    max_edges: int = MAX_SCAN_EDGES,
) -> PiecewiseReliability:
    """rho - rho_hat as an exact piecewise polynomial (a single piece where
    no breakpoint occurs)."""
    base = rho(graph, probmap, threads, max_edges)
    return rho_hat_piecewise(graph, probmap, threads, max_edges).map_pieces(lambda q: base - q)


def optimal_protocol(
    graph: TwoTerminalGraph,
    probmap: EdgeProbabilityMap | None = None,
    at: Fraction | None = None,
    threads: int | None = None,
    max_edges: int = MAX_SCAN_EDGES,
) -> tuple[Protocol, RemovalSet]:
    """A finite strongly essential protocol attaining the optimum: the
    reduction of the winning maximal finite candidate."""
    _, removal = rho_hat_at(graph, probmap, at, threads, max_edges)
    return spfp_reduce(cfp(graph).minus(removal)), removal


def breakpoint_free_check(
    graph: TwoTerminalGraph,
    a: int,
    b: int,
    threads: int | None = None,
    max_edges: int = MAX_SCAN_EDGES,
) -> bool:
    """True iff no breakpoint of the optimal reliability lies within
    (3b)^-m of a/b (excluding a/b itself)."""
    if b < 1 or not 0 <= a <= b:
        raise ValueError("need 0 <= a <= b with b >= 1")
    center = Fraction(a, b)
    radius = Fraction(1, (3 * b) ** graph.m)
    pw = rho_hat_piecewise(graph, None, threads, max_edges)
    for bp in pw.breakpoints:
        root = bp.root
        if root.equals_rational(center):
            continue
        while True:
            if root.exact is not None:
                dist = abs(root.exact - center)
                if 0 < dist < radius:
                    return False
                break
            if root.lo >= center:
                if root.lo - center >= radius:
                    break
                if root.hi - center <= radius:
                    return False
            elif root.hi <= center:
                if center - root.hi >= radius:
                    break
                if center - root.lo <= radius:
                    return False
            root.refine_once()
    return True
