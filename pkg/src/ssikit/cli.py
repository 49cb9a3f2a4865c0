"""Command line: ``ssify-kit <validate|ssify|analyze|run|dot|seg|verify>``.

Exit status: 0 ok, 1 parse or validation error, 2 transformation error,
3 analysis refused, 4 verification counterexample.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Optional, Sequence

from .checks import SSIViolation
from .clients import CLIENTS, get_client
from .dataflow import check_equivalence, extract_sparse_system, solve_dense, solve_sparse
from .interp import run
from .ir import IRError, ValidationError
from .seg import PVP_CLIENTS, SegError, build_seg, seg_equivalence
from .ssify import ssify
from .strategy import parse_strategy
from .text import parse, print_program, to_dot
from .verify import SUITES, run_suite

EXIT_OK, EXIT_PARSE, EXIT_TRANSFORM, EXIT_REFUSED, EXIT_COUNTEREXAMPLE = range(5)


class _Exit(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _load(path: str):
    try:
        if path == "-":
            text = sys.stdin.read()
        else:
            with open(path, encoding="utf-8") as f:
                text = f.read()
    except OSError as e:
        raise _Exit(EXIT_PARSE, f"{path}: {e.strerror}") from None
    try:
        return parse(text)
    except IRError as e:
        raise _Exit(EXIT_PARSE, f"{path}:{e}") from None


def _ssify(program, strategy: str):
    try:
        parse_strategy(strategy)
        return ssify(program, strategy)
    except (ValueError, ValidationError) as e:
        raise _Exit(EXIT_TRANSFORM, f"strategy {strategy!r}: {e}") from None


def _records(pairs) -> str:
    return "".join(" ".join(f"{k}={v}" for k, v in rec) + "\n" for rec in pairs)


# ---------------------------------------------------------------------------
# commands


def cmd_validate(args) -> int:
    program = _load(args.file)
    n = sum(len(fn.blocks) for fn in program.functions)
    print(f"{args.file}: ok ({len(program.functions)} functions, {n} blocks)")
    return EXIT_OK


def cmd_print(args) -> int:
    sys.stdout.write(print_program(_load(args.file)))
    return EXIT_OK


def cmd_ssify(args) -> int:
    program = _load(args.file)
    out, report = _ssify(program, args.strategy)
    sys.stdout.write(print_program(out))
    if not args.quiet:
        sys.stderr.write(report.to_text())
    return EXIT_OK


def cmd_analyze(args) -> int:
    program = _load(args.file)
    client = get_client(args.client)
    strategy = args.strategy or client.strategy
    if not args.raw:
        program, _ = _ssify(program, strategy)
    fn = program.function()
    mode = args.mode
    dense = sparse = None
    if mode in ("dense", "both"):
        dense = solve_dense(fn, client)
    if mode in ("sparse", "both"):
        try:
            constraints = extract_sparse_system(fn, client, verify=not args.no_check)
        except SSIViolation as e:
            raise _Exit(EXIT_REFUSED,
                        f"{args.client} refuses this program: it is not in SSI form "
                        f"for the client ({e}); ssify it with the client's strategy "
                        f"({client.strategy})") from None
        sparse = solve_sparse(constraints, client, fn)
        for v in fn.variables():
            sparse.values.setdefault(v, sparse.lattice.top)
    if args.show_program:
        sys.stdout.write(print_program(program))
    if sparse is not None:
        if args.format == "records":
            sys.stdout.write(_records(
                [("var", v), ("value", sparse.lattice.show(x))]
                for v, x in sorted(sparse.values.items())))
        else:
            sys.stdout.write(sparse.to_text())
    if dense is not None and (mode == "dense" or args.verbose):
        sys.stdout.write(dense.to_text())
    if mode == "both":
        rep = check_equivalence(dense, sparse)
        print(f"{'PASS' if rep.ok else 'FAIL'} dense and sparse: {rep}")
        return EXIT_OK if rep.ok else EXIT_COUNTEREXAMPLE
    return EXIT_OK


def cmd_run(args) -> int:
    program = _load(args.file)
    if args.strategy:
        program, _ = _ssify(program, args.strategy)
    inputs = [int(x) for x in args.inputs.split(",") if x.strip()] if args.inputs else []
    res = run(program, inputs, args.fuel)
    sys.stdout.write(res.trace_text())
    print(f"status={res.status} steps={res.steps}" + (f" message={res.message!r}" if res.message else ""))
    return EXIT_OK


def cmd_dot(args) -> int:
    program = _load(args.file)
    annotations = None
    if args.strategy:
        program, _ = _ssify(program, args.strategy)
    if args.client:
        client = get_client(args.client)
        if not args.strategy and not args.raw:
            program, _ = _ssify(program, client.strategy)
        annotations = solve_dense(program.function(), client).edge_labels()
    sys.stdout.write(to_dot(program, annotations))
    return EXIT_OK


def cmd_seg(args) -> int:
    program = _load(args.file)
    client = PVP_CLIENTS[args.client]()
    try:
        graph = build_seg(program, args.variable, client)
        if args.format == "dot":
            sys.stdout.write(graph.to_dot())
        else:
            sys.stdout.write(graph.to_text())
        rep = seg_equivalence(program, args.variable, client)
    except SegError as e:
        raise _Exit(EXIT_REFUSED, str(e)) from None
    print(f"{'PASS' if rep.ok else 'FAIL'} {rep}")
    return EXIT_OK if rep.ok else EXIT_COUNTEREXAMPLE


def cmd_verify(args) -> int:
    names = list(SUITES) if args.suite == "all" else [args.suite]
    status = EXIT_OK
    for name in names:
        res = run_suite(name, args.trials, args.seed)
        print(res.report(args.limit))
        if not res.ok:
            status = EXIT_COUNTEREXAMPLE
            print(f"  reproduce: ssify-kit verify --suite {name} --seed {args.seed}"
                  + (f" --trials {args.trials}" if args.trials is not None else ""))
    return status


# ---------------------------------------------------------------------------
# argument parsing


def _default_seed() -> int:
    raw = os.environ.get("SSIFY_SEED", "0")
    try:
        return int(raw)
    except ValueError:
        return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ssify-kit",
        description="Live range splitting to SSI flavours and sparse data-flow analysis.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command")

    p = sub.add_parser("validate", help="parse and check a program")
    p.add_argument("file")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("print", help="parse and pretty-print a program")
    p.add_argument("file")
    p.set_defaults(func=cmd_print)

    strategy_help = ("row name (ssi, abcd, ccp, uses-up, defs-uses-down, ...) "
                     "or expression such as defs_down+out_conds_down")
    p = sub.add_parser("ssify", help="split, rename and clean; report on stderr")
    p.add_argument("file")
    p.add_argument("--strategy", "-s", default="ssi", help=strategy_help)
    p.add_argument("--quiet", "-q", action="store_true", help="omit the report")
    p.set_defaults(func=cmd_ssify)

    p = sub.add_parser("analyze", help="solve a client analysis")
    p.add_argument("file")
    p.add_argument("--client", "-c", required=True, choices=sorted(CLIENTS))
    p.add_argument("--strategy", "-s", help="defaults to the client's own; " + strategy_help)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--sparse", dest="mode", action="store_const", const="sparse")
    group.add_argument("--dense", dest="mode", action="store_const", const="dense")
    group.add_argument("--both", dest="mode", action="store_const", const="both")
    p.set_defaults(mode="sparse")
    p.add_argument("--raw", action="store_true", help="analyse the file as written")
    p.add_argument("--no-check", action="store_true",
                   help="skip the SSI check before building the sparse system")
    p.add_argument("--show-program", action="store_true")
    p.add_argument("--verbose", "-v", action="store_true", help="with --both, list dense values too")
    p.add_argument("--format", choices=("text", "records"), default="text")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("run", help="interpret main and print its trace")
    p.add_argument("file")
    p.add_argument("--inputs", "-i", default="", help="comma separated input stream")
    p.add_argument("--fuel", type=int, default=10_000)
    p.add_argument("--strategy", "-s", help="ssify first")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("dot", help="GraphViz rendering, optionally annotated")
    p.add_argument("file")
    p.add_argument("--strategy", "-s", help="ssify first")
    p.add_argument("--client", "-c", choices=sorted(CLIENTS),
                   help="label edges with the dense solution")
    p.add_argument("--raw", action="store_true", help="with --client, do not ssify")
    p.set_defaults(func=cmd_dot)

    p = sub.add_parser("seg", help="sparse evaluation graph and its isomorphism check")
    p.add_argument("file")
    p.add_argument("variable")
    p.add_argument("--client", "-c", choices=sorted(PVP_CLIENTS), default="reaching-defs")
    p.add_argument("--format", choices=("text", "dot"), default="text")
    p.set_defaults(func=cmd_seg)

    p = sub.add_parser("verify", help="run a property suite")
    p.add_argument("--suite", default="all", choices=["all"] + list(SUITES))
    p.add_argument("--seed", type=int, default=_default_seed())
    p.add_argument("--trials", type=int, default=None, help="suite default when omitted")
    p.add_argument("--limit", type=int, default=10, help="failures to print per suite")
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except _Exit as e:
        print(f"ssify-kit: {e}", file=sys.stderr)
        return e.code
    except BrokenPipeError:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
