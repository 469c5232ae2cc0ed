"""Command-line driver.

    ndinfer infer <file.nd> (--value V | --all) [--method M] [--tol T]
                  [--no-compress] [--max-fanout N] [--export-mdp PATH]
                  [--oracle] [--stats] [--json] [--parallel]
    ndinfer bench <family> <size...> [--seed S] [--timeout SECS] [--json]
    ndinfer check-mdp <file> --value V [--method M] [--tol T]

Exit status: 0 on success, 1 on usage errors (bad flags, unreadable
input, a query value that does not fit the program's type), 2 on
analysis errors (rejected programs, method disagreement, malformed
MDP files).
"""

import argparse
import json
import sys

from .bench import FAMILIES, BenchmarkSpec, render_reports, run_bench
from .checker import (
    InferOptions, QueryResult, conditional_bisection, conditional_restart, infer,
)
from .errors import AnalysisError, NdError
from .frontend import load_program
from .mdp import export_explicit, load_explicit_mdp
from .oracle import build_exec_tree, oracle_max_conditional
from .parser import Parser
from .syntax import (
    EBool, EInt, ETuple, SBool, SInt, SProd, encode_int, parse_value_literal,
    render_typed_value,
)


class UsageError(Exception):
    pass


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def parse_query_value(text: str, sty):
    """A value literal in surface syntax, checked against the output type."""
    try:
        expr = Parser(text).parse_expr()
    except NdError as exc:
        raise UsageError("bad value literal %r: %s" % (text, exc))

    def convert(e, ty):
        if isinstance(ty, SBool) and isinstance(e, EBool):
            return e.value
        if isinstance(ty, SInt) and isinstance(e, EInt):
            if e.value >= 1 << ty.width:
                raise UsageError(
                    "value %d does not fit the program's int<%d> output"
                    % (e.value, ty.width)
                )
            return encode_int(e.value, ty.width)
        if isinstance(ty, SProd) and isinstance(e, ETuple):
            return (convert(e.left, ty.left), convert(e.right, ty.right))
        raise UsageError(
            "value literal %r does not have the program's output type" % text
        )

    return convert(expr, sty)


def render(result: QueryResult, fmt: str = "text", show_stats: bool = False) -> str:
    """Stable rendering; structured mode is one record per queried value."""
    if fmt == "json":
        records = []
        for r in result.results:
            records.append({
                "value": render_typed_value(r.value, result.surface_result_ty),
                "probability": r.probability,
                "method": r.method,
                "iterations": r.iterations,
                "add_nodes": r.stats["add_nodes"],
                "mdp_states_pre": r.stats["mdp_states_pre"],
                "mdp_states_post": r.stats["mdp_states_post"],
                "times": r.stats["times"],
            })
        return json.dumps(records, indent=2, sort_keys=True) + "\n"

    lines = []
    for r in result.results:
        name = render_typed_value(r.value, result.surface_result_ty)
        lines.append("%s: %.6f" % (name, r.probability))
        if show_stats:
            s = r.stats
            lines.append(
                "  stats: add_nodes=%d mdp_states_pre=%d mdp_states_post=%d"
                " trace_len=%d method=%s iterations=%d time=%.3fs"
                % (s["add_nodes"], s["mdp_states_pre"], s["mdp_states_post"],
                   s["trace_len"], r.method, r.iterations, s["times"]["total"])
            )
    return "\n".join(lines) + "\n"


def _build_parser():
    top = _ArgumentParser(prog="ndinfer")
    sub = top.add_subparsers(dest="command", required=True)

    p_infer = sub.add_parser("infer", help="maximum conditional output probabilities")
    p_infer.add_argument("file")
    group = p_infer.add_mutually_exclusive_group(required=True)
    group.add_argument("--value", help="query a single output value (surface syntax)")
    group.add_argument("--all", action="store_true", help="query every output value")
    p_infer.add_argument("--method", choices=("bisection", "restart", "both"),
                         default="bisection")
    p_infer.add_argument("--tol", type=float, default=1e-6)
    p_infer.add_argument("--no-compress", action="store_true")
    p_infer.add_argument("--max-fanout", type=int, default=40)
    p_infer.add_argument("--export-mdp", metavar="PATH")
    p_infer.add_argument("--oracle", action="store_true",
                         help="cross-check against the exact reference semantics")
    p_infer.add_argument("--stats", action="store_true")
    p_infer.add_argument("--json", action="store_true")
    p_infer.add_argument("--parallel", action="store_true")
    p_infer.set_defaults(handler=_cmd_infer)

    p_bench = sub.add_parser("bench", help="generate and run benchmark programs")
    p_bench.add_argument("family", choices=FAMILIES)
    p_bench.add_argument("sizes", nargs="*", type=int)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--timeout", type=float, default=None)
    p_bench.add_argument("--tol", type=float, default=1e-6)
    p_bench.add_argument("--no-compress", action="store_true")
    p_bench.add_argument("--json", action="store_true")
    p_bench.set_defaults(handler=_cmd_bench)

    p_check = sub.add_parser("check-mdp", help="run the checker on an explicit MDP file")
    p_check.add_argument("file")
    p_check.add_argument("--value", required=True,
                         help='target label: T, F, a tuple literal like (T,F), or true/false')
    p_check.add_argument("--method", choices=("bisection", "restart", "both"),
                         default="bisection")
    p_check.add_argument("--tol", type=float, default=1e-6)
    p_check.set_defaults(handler=_cmd_check_mdp)
    return top


def _cmd_infer(args) -> int:
    try:
        program = load_program(args.file)
    except OSError as exc:
        raise UsageError("cannot read %s: %s" % (args.file, exc))

    options = InferOptions(
        method=args.method,
        tol=args.tol,
        compress=not args.no_compress,
        max_fanout=args.max_fanout,
        parallel=args.parallel,
    )
    if args.all:
        query = "all"
    else:
        query = parse_query_value(args.value, program.surface_result_ty)

    result = infer(program, query, options)

    if args.oracle:
        tree = build_exec_tree(program)
        for r in result.results:
            exact = oracle_max_conditional(tree, r.value)
            if abs(r.probability - float(exact)) > 2 * args.tol:
                raise AnalysisError(
                    "oracle disagrees on %s: engine %.9f vs exact %s"
                    % (render_typed_value(r.value, result.surface_result_ty),
                       r.probability, exact)
                )

    if args.export_mdp:
        single = len(result.results) == 1
        for i, r in enumerate(result.results):
            path = args.export_mdp if single else "%s.%d" % (args.export_mdp, i)
            with open(path, "wb") as sink:
                export_explicit(r.mdp, sink)

    sys.stdout.write(render(result, "json" if args.json else "text", args.stats))
    return 0


def _cmd_bench(args) -> int:
    if args.family == "threesat":
        if len(args.sizes) != 3:
            raise UsageError("threesat takes three sizes: vars clauses ndet-percent")
        specs = [BenchmarkSpec("threesat", tuple(args.sizes), args.seed)]
    elif args.family == "bayes_net":
        sizes = args.sizes or [0]
        specs = [BenchmarkSpec("bayes_net", (s,), args.seed) for s in sizes]
    else:
        if not args.sizes:
            raise UsageError("%s needs at least one size" % args.family)
        specs = [BenchmarkSpec(args.family, (s,), args.seed) for s in args.sizes]

    reports = run_bench(specs, tol=args.tol, compress=not args.no_compress,
                        timeout=args.timeout)
    if args.json:
        records = [{
            "family": r.spec.family,
            "size": list(r.spec.size),
            "seed": r.spec.seed,
            "status": r.status,
            "results": r.results,
            "compile_time": r.compile_time,
            "check_time": r.check_time,
            "total_time": r.total_time,
            "add_size": r.add_size,
            "mdp_states_pre": r.mdp_states_pre,
            "mdp_states_post": r.mdp_states_post,
        } for r in reports]
        sys.stdout.write(json.dumps(records, indent=2, sort_keys=True) + "\n")
    else:
        sys.stdout.write(render_reports(reports))
    return 0


def _cmd_check_mdp(args) -> int:
    try:
        with open(args.file, "rb") as handle:
            m = load_explicit_mdp(handle)
    except OSError as exc:
        raise UsageError("cannot read %s: %s" % (args.file, exc))

    text = args.value
    if text == "true":
        target = True
    elif text == "false":
        target = False
    else:
        try:
            target = parse_value_literal(text)
        except ValueError as exc:
            raise UsageError(str(exc))

    if args.method in ("bisection", "both"):
        prob, _, _ = conditional_bisection(m, target, args.tol)
    if args.method in ("restart", "both"):
        prob_restart, _ = conditional_restart(m, target, args.tol)
        if args.method == "both" and abs(prob - prob_restart) > 2 * args.tol:
            raise AnalysisError(
                "methods disagree: bisection %.9f vs restart %.9f"
                % (prob, prob_restart)
            )
        if args.method == "restart":
            prob = prob_restart
    sys.stdout.write("%s: %.6f\n" % (text, prob))
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return args.handler(args)
    except UsageError as exc:
        print("usage error: %s" % exc, file=sys.stderr)
        return 1
    except NdError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
