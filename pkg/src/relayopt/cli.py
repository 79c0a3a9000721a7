"""Command-line front end: every subcommand is a thin shell over the
library, reading graph JSON from standard input (so constructions chain
through pipes) and writing result JSON to standard output.

Exit codes: 0 success, 1 usage error, 2 domain error, 3 resource guard
exceeded.  Errors are reported as JSON on standard error.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from . import asymptotics, constructions, engine, optimizer, reliability
from .errors import FormatError, GuardExceededError, RelayoptError
from .graphs import (
    EdgeProbabilityMap,
    Protocol,
    TwoTerminalGraph,
    b0,
    graph_json,
    parse_graph,
    parse_protocol,
    protocol_json,
)
from .optimizer import PiecewiseReliability
from .polys import Poly, parse_rational
from .roots import AlgebraicNumber
from .simulate import simulate as run_trials

OUTPUT_WIDTH = Fraction(1, 1 << 20)


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _poly_json(poly: Poly) -> list[str]:
    return poly.to_strings()


def _interval_json(root: AlgebraicNumber) -> list[str]:
    root.refine_below(OUTPUT_WIDTH)
    return [str(root.lo), str(root.hi)]


def _piecewise_json(pw: PiecewiseReliability) -> dict:
    bps = [
        {"interval": _interval_json(bp.root), "poly": _poly_json(bp.root.poly), "order": bp.order}
        for bp in pw.breakpoints
    ]
    bounds = ["0"] + [f"bp{i}" for i in range(len(bps))] + ["1"]
    pieces = [
        {
            "from": bounds[i],
            "to": bounds[i + 1],
            "poly": _poly_json(piece.poly),
            "removed": [list(ins) for ins in sorted(piece.removed)],
        }
        for i, piece in enumerate(pw.pieces)
    ]
    return {"breakpoints": bps, "pieces": pieces}


def _single_or_piecewise(pw: PiecewiseReliability) -> dict:
    if len(pw.pieces) == 1:
        return {
            "poly": _poly_json(pw.pieces[0].poly),
            "removed": [list(ins) for ins in sorted(pw.pieces[0].removed)],
        }
    return _piecewise_json(pw)


def _read_json(stream, what: str):
    try:
        return json.load(stream)
    except json.JSONDecodeError as exc:
        raise FormatError(f"bad {what} JSON: {exc}") from exc


def _load_graph(stdin) -> tuple[TwoTerminalGraph, EdgeProbabilityMap]:
    return parse_graph(_read_json(stdin, "graph"))


def _load_graph_file(path: str) -> tuple[TwoTerminalGraph, EdgeProbabilityMap]:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_graph(_read_json(fh, "graph"))


def _load_protocol(path: str | None, graph: TwoTerminalGraph) -> Protocol:
    if path is None:
        return engine.cfp(graph)
    with open(path, "r", encoding="utf-8") as fh:
        return parse_protocol(_read_json(fh, "protocol"), graph)


def _load_tree(path: str) -> constructions.SPTree:
    with open(path, "r", encoding="utf-8") as fh:
        return constructions.parse_sptree(_read_json(fh, "tree"))


def _parse_orders(raw: str) -> tuple[int, ...]:
    raw = raw.strip()
    if not raw:
        return ()
    try:
        return tuple(int(part) for part in raw.split(","))
    except ValueError as exc:
        raise FormatError(f"bad order list {raw!r}") from exc


def build_parser() -> _Parser:
    parser = _Parser(prog="relayopt", description=__doc__)
    parser.add_argument("--threads", type=int, default=None, help="parallel subset scanning")
    parser.add_argument("--max-edges", type=int, default=reliability.MAX_SCAN_EDGES,
                        help="guard on exhaustive subset scans")
    parser.add_argument("--quiet", action="store_true", help="suppress progress output")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("validate")
    sub.add_parser("cfp")
    sub.add_parser("paths")

    p = sub.add_parser("finite")
    p.add_argument("--witness", action="store_true")
    p.add_argument("--protocol")

    p = sub.add_parser("spfp-reduce")
    p.add_argument("--protocol", required=True)

    p = sub.add_parser("reliability")
    p.add_argument("--protocol")
    p.add_argument("--prime", action="store_true")
    p.add_argument("--at")

    p = sub.add_parser("rho-hat")
    p.add_argument("--at")
    p.add_argument("--piecewise", action="store_true")

    p = sub.add_parser("discrepancy")
    p.add_argument("--remove", required=True)
    p.add_argument("--check-event", action="store_true")

    sub.add_parser("min-discrepancy")

    p = sub.add_parser("compose")
    p.add_argument("--op", choices=["series", "parallel", "kelmans"], required=True)
    p.add_argument("--with", dest="with_file")
    p.add_argument("--f2")
    p.add_argument("--g1")
    p.add_argument("--g2")

    p = sub.add_parser("expand")
    p.add_argument("--edge", required=True, help="ordered endpoints u-v")
    p.add_argument("--with", dest="with_file", required=True, help="series-parallel tree JSON file")

    p = sub.add_parser("crossing-pair")
    p.add_argument("--profile", required=True)

    p = sub.add_parser("breakpoint-graph")
    p.add_argument("--orders", required=True)

    sub.add_parser("census")
    sub.add_parser("near-zero")
    sub.add_parser("near-one")

    p = sub.add_parser("robustness")
    p.add_argument("--protocol")

    p = sub.add_parser("simulate")
    p.add_argument("--p", required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--protocol")
    p.add_argument("--copies", action="store_true")

    p = sub.add_parser("fixture")
    p.add_argument("name", choices=["b0"])
    return parser


def _run(args, stdin, stdout) -> None:
    threads = args.threads
    guard = args.max_edges

    def emit(obj) -> None:
        json.dump(obj, stdout, sort_keys=True)
        stdout.write("\n")

    cmd = args.command
    if cmd == "fixture":
        emit(graph_json(b0()))
        return

    graph, probmap = _load_graph(stdin)

    if cmd == "validate":
        emit(graph_json(graph, probmap))
    elif cmd == "cfp":
        emit(protocol_json(engine.cfp(graph)))
    elif cmd == "paths":
        emit({"paths": [list(p) for p in engine.enumerate_sr_paths(graph)]})
    elif cmd == "finite":
        protocol = _load_protocol(args.protocol, graph)
        finite = engine.is_finite(protocol)
        result = {"finite": finite}
        if args.witness and not finite:
            witness = engine.finiteness_witness(protocol)
            result["witness"] = [list(state) for state in witness]
        emit(result)
    elif cmd == "spfp-reduce":
        protocol = _load_protocol(args.protocol, graph)
        emit(protocol_json(engine.spfp_reduce(protocol)))
    elif cmd == "reliability":
        protocol = _load_protocol(args.protocol, graph)
        fn = reliability.rho_prime_A if args.prime else reliability.rho_A
        poly = fn(protocol, probmap, threads, guard)
        if args.at is not None:
            emit({"value": str(poly(parse_rational(args.at)))})
        else:
            emit({"poly": _poly_json(poly)})
    elif cmd == "rho-hat":
        if args.piecewise:
            emit(_piecewise_json(optimizer.rho_hat_piecewise(graph, probmap, threads, guard)))
        elif args.at is not None:
            value, removed = optimizer.rho_hat_at(graph, probmap, parse_rational(args.at), threads, guard)
            emit({"value": str(value), "removed": [list(i) for i in sorted(removed)]})
        else:
            poly, removed = optimizer.rho_hat_at(graph, probmap, None, threads, guard)
            emit({"poly": _poly_json(poly), "removed": [list(i) for i in sorted(removed)]})
    elif cmd == "discrepancy":
        with open(args.remove, "r", encoding="utf-8") as fh:
            removal = parse_protocol(_read_json(fh, "protocol"), graph)
        report = optimizer.discrepancy(
            graph, removal.instructions, probmap, args.check_event, threads, guard
        )
        emit({
            "poly": _poly_json(report.polynomial),
            "finite": report.finite,
            "removed": [list(i) for i in sorted(report.removed)],
        })
    elif cmd == "min-discrepancy":
        emit(_single_or_piecewise(optimizer.min_discrepancy(graph, probmap, threads, guard)))
    elif cmd == "compose":
        if args.op == "kelmans":
            for flag in ("f2", "g1", "g2"):
                if getattr(args, flag) is None:
                    raise _UsageError(f"compose --op kelmans requires --{flag}")
            f2, _ = _load_graph_file(args.f2)
            g1, _ = _load_graph_file(args.g1)
            g2, _ = _load_graph_file(args.g2)
            h1, h2 = constructions.kelmans_compose(graph, f2, g1, g2)
            emit({"h1": graph_json(h1), "h2": graph_json(h2)})
        else:
            if args.with_file is None:
                raise _UsageError("compose requires --with FILE")
            other, _ = _load_graph_file(args.with_file)
            joined = (constructions.join_series if args.op == "series" else constructions.join_parallel)(graph, other)
            emit(graph_json(joined))
    elif cmd == "expand":
        if "-" not in args.edge:
            raise _UsageError("--edge must be u-v")
        x, y = args.edge.split("-", 1)
        exp = constructions.expand(graph, (x, y), _load_tree(args.with_file))
        emit(graph_json(exp.graph))
    elif cmd == "crossing-pair":
        h1, h2 = constructions.build_crossing_pair(_parse_orders(args.profile))
        emit({
            "h1": graph_json(constructions.realize(h1)),
            "h2": graph_json(constructions.realize(h2)),
            "trees": {"h1": constructions.sptree_json(h1), "h2": constructions.sptree_json(h2)},
        })
    elif cmd == "breakpoint-graph":
        emit(graph_json(constructions.build_breakpoint_graph(_parse_orders(args.orders))))
    elif cmd == "census":
        paths = asymptotics.path_census(graph, guard)
        cuts = asymptotics.cut_census(graph, guard)
        emit({
            "k": paths.distance,
            "d": {str(k): v for k, v in sorted(paths.counts.items())},
            "e": cuts.min_cut,
            "c": {str(k): v for k, v in sorted(cuts.counts.items())},
        })
    elif cmd == "near-zero":
        k, dk, dk1, protocol = asymptotics.near_zero_expansion(graph, guard)
        emit({"k": k, "d_k": dk, "d_k1": dk1, "protocol": [list(i) for i in protocol]})
    elif cmd == "near-one":
        e, ce = asymptotics.near_one_expansion(graph, guard)
        emit({"e": e, "c_e": ce})
    elif cmd == "robustness":
        protocol = _load_protocol(args.protocol, graph)
        emit({"robustness": asymptotics.robustness(protocol, guard)})
    elif cmd == "simulate":
        protocol = _load_protocol(args.protocol, graph)
        report = run_trials(
            protocol, parse_rational(args.p), args.trials, args.seed,
            count_copies=args.copies, max_edges=guard,
        )
        emit(report.to_json())
    else:  # pragma: no cover - argparse enforces the choices
        raise _UsageError(f"unknown command {cmd!r}")


def main(argv: list[str] | None = None, stdin=None, stdout=None, stderr=None) -> int:
    stdin = sys.stdin if stdin is None else stdin
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr

    def fail(code: str, message: str, status: int) -> int:
        json.dump({"error": {"code": code, "message": message}}, stderr, sort_keys=True)
        stderr.write("\n")
        return status

    try:
        args = build_parser().parse_args(argv)
    except _UsageError as exc:
        return fail("usage", str(exc), 1)
    try:
        _run(args, stdin, stdout)
    except _UsageError as exc:
        return fail("usage", str(exc), 1)
    except GuardExceededError as exc:
        return fail(exc.code, str(exc), 3)
    except RelayoptError as exc:
        return fail(exc.code, str(exc), 2)
    except BrokenPipeError:
        return 0
    return 0


if __name__ == "__main__":
    sys.exit(main())
