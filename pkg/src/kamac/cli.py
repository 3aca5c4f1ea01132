"""``ka-mac`` command line.

Exit codes: 0 success, 2 parse error, 3 validation error, 4 size cap
exceeded, 5 domain or convergence error.  Reports go to stdout, diagnostics
to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import DomainError, KamacError, ValidationError
from .graphs import build_char_graph, build_conditional_char_graph, or_power, to_dot
from .ka import evaluate_direct, pipeline_evaluate
from .prob import as_symbol
from .report import SCHEMA, ReportBuilder, jsonable, subset_label, tag
from .scenario import load_scenario

COMMANDS = ("rates", "simulate", "graph", "coupling", "calculus", "report")


def _numbers(text: str, what: str) -> list:
    try:
        return [as_symbol(v.strip()) for v in text.split(",") if v.strip()]
    except (ValueError, ValidationError):
        raise ValidationError(f"expected comma-separated numbers, got {text!r}", what) from None


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _rates_table(section: dict) -> str:
    schemes = ["slepian_wolf", "inner", "graph_lower", "coloring_achievable"]
    present = [s for s in schemes if any(s in row for row in section["rows"])]
    lines = ["subset".ljust(10) + "".join(s.rjust(22) for s in present)]
    for row in section["rows"]:
        cells = []
        for s in present:
            v = row.get(s)
            cells.append(("-" if v is None else f"{v['value']:.6f}").rjust(22))
        lines.append(subset_label([i - 1 for i in row["subset"]]).ljust(10) + "".join(cells))
    return "\n".join(lines) + "\n"


def cmd_rates(sc, args):
    section = ReportBuilder(sc).rates()
    if args.table:
        sys.stdout.write(_rates_table(section))
    else:
        _emit({"schema": SCHEMA, "scenario": sc.name, "rate_report": section})


def cmd_simulate(sc, args):
    if sc.system is None:
        raise DomainError(f"{sc.function} has no decomposition to simulate")
    x = _numbers(args.x, "--x")
    tr = pipeline_evaluate(sc.system, x)
    direct = evaluate_direct(sc.function, sc.params, x)
    _emit({
        "schema": SCHEMA,
        "scenario": sc.name,
        "x": jsonable(list(tr.x)),
        "y_pq": [[[tag(v) for v in row] for row in block] for block in tr.y_pq],
        "y_q": [[tag(v) for v in row] for row in tr.y_q],
        "output": tag(tr.output),
        "direct": tag(float(direct), "closed-form"),
        "abs_error": tag(abs(tr.output - float(direct))),
    })


def _fixed(text: str, n: int) -> dict:
    out = {}
    for part in text.split(","):
        if "=" not in part:
            raise ValidationError(f"expected i=v, got {part!r}", "--conditional")
        i, v = part.split("=", 1)
        try:
            idx = int(i) - 1
        except ValueError:
            raise ValidationError(f"bad source index {i!r}", "--conditional") from None
        if not 0 <= idx < n:
            raise ValidationError(f"source {i} out of range 1..{n}", "--conditional")
        out[idx] = as_symbol(v.strip())
    return out


def cmd_graph(sc, args):
    j = sc.joint
    p = args.source - 1
    if not 0 <= p < j.n:
        raise ValidationError(f"source {args.source} out of range 1..{j.n}", "--source")
    f = lambda x: evaluate_direct(sc.function, sc.params, x)  # noqa: E731
    rule = args.rule or sc.options["edge_rule"]
    if args.conditional:
        g = build_conditional_char_graph(j, f, p, _fixed(args.conditional, j.n), rule=rule)
    else:
        g = build_char_graph(j, f, p)
    if args.power > 1:
        g = or_power(g, args.power)
    dot = to_dot(g, f"G{args.source}")
    summary = {
        "schema": SCHEMA,
        "scenario": sc.name,
        "source": args.source,
        "power": args.power,
        "conditional": args.conditional,
        "rule": rule,
        "vertex_count": tag(len(g)),
        "edge_count": tag(len(g.edges)),
    }
    if args.dot and args.dot != "-":
        with open(args.dot, "w") as fh:
            fh.write(dot)
        summary["dot"] = args.dot
        _emit(summary)
    else:
        sys.stdout.write(dot)


def cmd_coupling(sc, args):
    _emit({"schema": SCHEMA, "scenario": sc.name, "coupling": ReportBuilder(sc).coupling()})


def cmd_calculus(sc, args):
    at = _numbers(args.at, "--at")
    if len(at) != sc.n:
        raise ValidationError(f"needs {sc.n} components", "--at")
    dx = _numbers(args.dx, "--dx") if args.dx else None
    if dx is not None and len(dx) != sc.n:
        raise ValidationError(f"needs {sc.n} components", "--dx")
    _emit({"schema": SCHEMA, "scenario": sc.name, "calculus": ReportBuilder(sc).calculus(at, dx)})


def cmd_report(sc, args):
    _emit(ReportBuilder(sc).full())


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ka-mac", description="Distributed function computation toolkit.")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, help_):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--scenario", required=True, help="scenario JSON path or bundled name")
        return sp

    add("rates", "rate regions").add_argument("--table", action="store_true",
                                              help="plain-text table instead of JSON")
    add("simulate", "run one realization through the pipeline").add_argument(
        "--x", required=True, help="comma-separated source values")
    g = add("graph", "characteristic graph as DOT")
    g.add_argument("--source", type=int, required=True, help="1-based source index")
    g.add_argument("--power", type=int, default=1)
    g.add_argument("--conditional", help="fixed values, e.g. 2=0")
    g.add_argument("--rule", choices=("pointwise", "global"))
    g.add_argument("--dot", help="output file; '-' or omitted writes DOT to stdout")
    add("coupling", "maximal coupling of the two marginals")
    c = add("calculus", "gradient/Hessian/Taylor checks")
    c.add_argument("--at", required=True)
    c.add_argument("--dx")
    add("report", "full JSON report")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        sc = load_scenario(args.scenario)
        globals()["cmd_" + args.command](sc, args)
    except KamacError as exc:
        print(f"ka-mac: error: {exc}", file=sys.stderr)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
