"""Acceptance suite: one test per criterion, every tolerance exact.

A conftest hook prints one PASS/FAIL line per criterion as the suite runs.
"""

import random
from fractions import Fraction

import pytest

from relayopt import (
    EdgeProbabilityMap,
    Protocol,
    a_paths,
    a_walks,
    bounded_protocol,
    breakpoint_free_check,
    brute_force_rho_hat,
    cfp,
    discrepancy,
    enumerate_sr_paths,
    essential_circuits,
    finiteness_witness,
    is_finite,
    min_discrepancy,
    rho,
    rho_A,
    rho_hat_at,
    rho_hat_piecewise,
    simulate,
    spfp_reduce,
    strongly_essential_instructions,
)
from relayopt.constructions import (
    build_breakpoint_graph,
    build_crossing_pair,
    delta_rho,
    edge,
    expand,
    implied_distribution,
    kelmans_compose,
    parallel,
    path_graph,
    profile,
    profile_multiplicities,
    realize,
    sp_level_injection,
)
from relayopt.graphs import TwoTerminalGraph, b0
from relayopt.polys import Poly
from relayopt.roots import AlgebraicNumber

from conftest import random_connected_graph, random_sptree

X = Poly.x()
ONEMX = Poly((1, -1))
SAMPLE_POINTS = [Fraction(1, 4), Fraction(1, 2), Fraction(3, 4)]

B0_CFP_TRIPLES = {
    ("s", "1", "3"), ("s", "1", "4"), ("s", "2", "3"), ("s", "2", "5"),
    ("1", "3", "2"), ("1", "3", "4"), ("1", "3", "5"), ("1", "4", "3"),
    ("1", "4", "r"), ("2", "3", "1"), ("2", "3", "4"), ("2", "3", "5"),
    ("2", "5", "3"), ("2", "5", "r"), ("3", "1", "4"), ("3", "2", "5"),
    ("3", "4", "r"), ("3", "5", "r"), ("4", "3", "2"), ("4", "3", "5"),
    ("5", "3", "1"), ("5", "3", "4"),
}


def test_c01_b0_golden():
    graph = b0()
    astar = cfp(graph)
    assert {tuple(i) for i in astar.instructions} == B0_CFP_TRIPLES
    assert ("4", "1", "3") not in astar
    assert not is_finite(astar)
    witness = finiteness_witness(astar)
    assert witness == (("1", "4"), ("4", "3"), ("3", "2"), ("2", "5"), ("5", "3"), ("3", "1"))
    assert essential_circuits(astar) == [witness]


def test_c02_b0_min_discrepancy():
    assert min_discrepancy(b0()).single() == X ** 6 * ONEMX ** 4


INSERTED = {
    "edge": edge(),
    "chain2": path_graph(3),
    "double2": parallel(path_graph(3), path_graph(3)),
}


@pytest.mark.parametrize("name1", sorted(INSERTED))
@pytest.mark.parametrize("name2", sorted(INSERTED))
def test_c03_discrepancy_formulas_with_substitution(name1, name2):
    h1, h2 = INSERTED[name1], INSERTED[name2]
    first = expand(b0(), ("s", "1"), h1)
    second = expand(first.graph, ("s", "2"), h2)
    graph = second.graph
    p1, p2 = rho(realize(h1)), rho(realize(h2))
    base = X ** 5 * ONEMX ** 3

    d432 = discrepancy(graph, [("4", "3", "2")]).polynomial
    assert d432 == base * p1 * (1 - p2)

    f1 = base * (p1 - p1 * p2)  # min attained by the first inserted graph
    f2 = base * (p2 - p1 * p2)
    md = min_discrepancy(graph)
    for piece in md.pieces:
        assert piece.poly in (f1, f2)
    # pointwise agreement with the closed form on a dense rational grid
    for k in range(1, 32):
        q = Fraction(k, 32)
        expected = base(q) * (min(p1(q), p2(q)) - p1(q) * p2(q))
        assert md.value_at(q) == expected
    # breakpoints are exactly the odd-order sign changes of p1 - p2
    diff = p1 - p2
    odd_roots = [] if diff.is_zero else [
        root for root, mult in profile(diff) if mult % 2 == 1
    ]
    assert len(md.breakpoints) == len(odd_roots)
    for bp, root in zip(md.breakpoints, odd_roots):
        assert bp.root.compare(root) == 0


def test_c04_kelmans_identity():
    rng = random.Random(20260401)
    for _ in range(10):
        f1, f2, g1, g2 = (random_sptree(rng, 5) for _ in range(4))
        h1, h2 = kelmans_compose(f1, f2, g1, g2)
        assert delta_rho(h1, h2) == delta_rho(f1, f2) * delta_rho(g1, g2)


def test_c05_profiles():
    width = Fraction(1, 1 << 20)
    roots = []
    for k in (2, 3, 4):
        prof = profile(delta_rho(path_graph(k), parallel(path_graph(k + 1), path_graph(k + 1))))
        assert profile_multiplicities(prof) == (1,)
        root = prof[0][0]
        assert root.exact is not None or root.width <= width
        roots.append(root)
    gamma2, gamma3, gamma4 = roots
    assert gamma2.compare(gamma3) > 0 and gamma3.compare(gamma4) > 0
    for request in ((1,), (2,), (1, 1)):
        h1, h2 = build_crossing_pair(request)
        assert profile_multiplicities(profile(delta_rho(h1, h2))) == request


def test_c06_breakpoints():
    graph = build_breakpoint_graph((1,))
    pw = rho_hat_piecewise(graph)
    assert len(pw.breakpoints) == 1
    bp = pw.breakpoints[0]
    assert bp.order == 1
    golden = AlgebraicNumber(Poly((-1, 1, 1)), Fraction(0), Fraction(1))
    assert bp.root.compare(golden) == 0
    # the reported isolating interval brackets the root of p^2 + p - 1
    defining = Poly((-1, 1, 1))
    assert defining(bp.root.lo) * defining(bp.root.hi) < 0
    for denom in range(1, 5):
        for numer in range(0, denom + 1):
            assert breakpoint_free_check(graph, numer, denom)


def test_c07_oracle_equivalence():
    rng = random.Random(31337)
    graphs = [b0()]
    while len(graphs) < 21:
        g = random_connected_graph(rng, max_extra=4, max_edges=8)
        if len(cfp(g)) <= 22:  # oracle guard
            graphs.append(g)
    for g in graphs:
        for p0 in SAMPLE_POINTS:
            value, _ = rho_hat_at(g, at=p0)
            assert value == brute_force_rho_hat(g, p0)


def test_c08_asymptotic_heads():
    graph = b0()
    pw = rho_hat_piecewise(graph)
    left = pw.leftmost
    # lowest-order terms 2p^3 + 4p^4, nothing below
    assert [left.poly.coefficient(i) for i in range(5)] == [0, 0, 0, 2, 4]
    right = pw.rightmost
    in_q = right.poly.compose(Poly((1, -1)))  # substitute p = 1 - q
    assert [in_q.coefficient(i) for i in range(3)] == [1, 0, -2]
    short = bounded_protocol(graph, 4)
    witness_protocol = cfp(graph).minus(left.removed)
    assert short.instructions <= witness_protocol.instructions


def test_c09_spfp_reduction_contract():
    rng = random.Random(424242)
    graph = b0()
    astar = cfp(graph)
    fixtures = [
        astar.minus([("4", "3", "2")]),
        astar.minus([("5", "3", "1")]),
        astar.minus([("4", "3", "2"), ("5", "3", "1")]),
        bounded_protocol(graph, 4),
        cfp(realize(path_graph(5))),
        cfp(realize(parallel(path_graph(3), path_graph(4)))),
    ]
    for _ in range(6):
        g = random_connected_graph(rng, 3, 7)
        proto = cfp(g)
        sub = Protocol(g, [i for i in sorted(proto.instructions) if rng.random() < 0.7])
        if is_finite(sub):
            fixtures.append(sub)
    for proto in fixtures:
        reduced = spfp_reduce(proto)
        assert is_finite(reduced)  # (d)
        assert strongly_essential_instructions(reduced) == reduced.instructions  # (c)
        reduced_path_edges = [
            frozenset(frozenset(e) for e in zip(p, p[1:])) for p in a_paths(reduced)
        ]
        for source in (proto, reduced):  # (a) and (b)
            for walk in a_walks(source):
                walk_edges = {frozenset(e) for e in zip(walk, walk[1:])}
                assert any(pe <= walk_edges for pe in reduced_path_edges)


def test_c10_series_parallel_baseline():
    rng = random.Random(5150)
    for _ in range(20):
        tree = random_sptree(rng, 16)
        graph = realize(tree)
        astar = cfp(graph)
        assert is_finite(astar)
        poly, removal = rho_hat_at(graph)
        assert removal == frozenset()
        assert poly == rho(graph)
        levels = sp_level_injection(tree)
        assert len(set(levels.values())) == len(levels)
        for p in enumerate_sr_paths(graph):
            vals = [levels[v] for v in p]
            assert all(a < b for a, b in zip(vals, vals[1:]))


def test_c11_expansion_transport():
    rng = random.Random(8086)
    from relayopt import all_instructions, rho_prime_A
    from relayopt.constructions import extend_protocol

    def is_finite_spfp(protocol, astar):
        return (
            protocol.instructions <= astar.instructions
            and strongly_essential_instructions(protocol) == protocol.instructions
            and is_finite(protocol)
        )

    done = 0
    while done < 10:
        base = random_connected_graph(rng, 3, 7)
        e1 = sorted(base.edges)[rng.randrange(base.m)]
        tree = random_sptree(rng, 5)
        exp = expand(base, e1, tree)
        if exp.graph.m > 12:
            continue
        done += 1
        pm = EdgeProbabilityMap.constant_p(exp.graph)
        implied = implied_distribution(exp, pm)
        # (b) reliability transports exactly
        assert rho(exp.graph, pm) == rho(base, implied)
        astar_base = cfp(base)
        astar_big = cfp(exp.graph)
        legal = all_instructions(base)
        protos = [Protocol(base, [i for i in legal if rng.random() < 0.5]) for _ in range(2)]
        protos.append(Protocol(base, [i for i in sorted(astar_base.instructions) if rng.random() < 0.6]))
        for proto in protos:
            extended = extend_protocol(exp, proto)
            # (a) path-survival reliability transports exactly
            assert rho_prime_A(proto, implied) == rho_prime_A(extended, pm)
            # (d) finite SPFP in the base iff finite SPFP in the expansion
            assert is_finite_spfp(proto, astar_base) == is_finite_spfp(extended, astar_big)
            if is_finite(proto):
                reduced = spfp_reduce(proto)
                assert is_finite_spfp(reduced, astar_base)
                assert is_finite_spfp(extend_protocol(exp, reduced), astar_big)

    # (e) equality through the fixture expansions: the replaced edges carry
    # no essential circuit, so the optimum transports exactly.
    h1, h2 = INSERTED["chain2"], INSERTED["double2"]
    first = expand(b0(), ("s", "1"), h1)
    second = expand(first.graph, ("s", "2"), h2)
    pm = EdgeProbabilityMap.constant_p(second.graph)
    back_once = implied_distribution(second, pm)
    back_twice = implied_distribution(first, back_once)
    for p0 in SAMPLE_POINTS:
        big, _ = rho_hat_at(second.graph, pm, at=p0)
        small, _ = rho_hat_at(b0(), back_twice, at=p0)
        assert big == small


SIM_HALF = Fraction(1, 2)


def _simulation_fixtures():
    graph = b0()
    astar = cfp(graph)
    single = TwoTerminalGraph(["s", "r"], [("s", "r")], "s", "r")
    return [
        ("single-edge", cfp(single)),
        ("chain-3", cfp(realize(path_graph(4)))),
        ("double-route", cfp(realize(parallel(path_graph(3), path_graph(3))))),
        ("b0-two-removals", astar.minus([("4", "3", "2"), ("5", "3", "1")])),
        ("b0-short-paths", bounded_protocol(graph, 4)),
    ]


def test_c12_simulation_agreement():
    trials = 1_000_000
    for name, proto in _simulation_fixtures():
        exact = float(rho_A(proto)(SIM_HALF))
        report = simulate(proto, SIM_HALF, trials, seed=2026)
        assert abs(float(report.estimate) - exact) <= 4 * report.stderr, name
        again = simulate(proto, SIM_HALF, trials, seed=2026)
        assert report == again and report.to_json() == again.to_json()
