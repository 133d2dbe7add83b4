"""Command-line front end.

Exit codes: 0 success / all checks pass; 1 checked failure (axiom
violation, cyclic causal relation, query not identified within budget);
2 usage, syntax, or semantic error in inputs.  ``--format json`` emits a
machine-readable envelope validating against ``schema/report.schema.json``.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .axioms import (
    check_assumption1,
    check_axiom2,
    check_axiom3,
    check_axiom4,
    check_axiom6,
)
from .beliefs import BeliefFamily, causal_graph, indirect_causes
from .docalc import NotIdentified, do_probability, identify
from .errors import CycleError, EngineError, ParseError
from .graph import Dag
from .modelfile import BuiltModel, load_model, materialize
from .queries import parse_query, resolve_query
from .represent import represents_family, theorem1_verdict
from .space import Policy

OK, CHECK_FAILED, USAGE = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="causalcalc",
        description="discrete causal-calculus engine: axioms, d-separation, "
        "do-probabilities, and identification over .cm model files",
    )
    parser.add_argument("--version", action="version", version="%(prog)s " + __version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, query=False, sets=False, figures=False):
        p.add_argument("--model", required=True, help="path to a .cm model file")
        p.add_argument("--tol", type=float, default=1e-9, help="numeric tolerance")
        p.add_argument("--seed", type=int, default=0,
                       help="seed for random parameterization of structure-only models")
        p.add_argument("--max-vars", type=int, default=6,
                       help="refuse exponential sweeps above this many variables")
        p.add_argument("--format", choices=("text", "json"), default="text")
        if query:
            p.add_argument("--query", required=True, help='e.g. "P(L=1 | do(E=1))"')
        if sets:
            p.add_argument("--sets", required=True,
                           help='three ;-separated groups "I;J;K" of ,-separated names')
        if figures:
            p.add_argument("--out", required=True, help="output directory for figures and CSV")
        return p

    common(sub.add_parser("validate", help="parse and semantically check a model file"))
    common(sub.add_parser("dsep", help="d-separation query on the declared graph"), sets=True)
    common(sub.add_parser("axioms", help="run the axiom and assumption checkers"))
    common(sub.add_parser("discover", help="discover the causal graph from the beliefs"))
    common(sub.add_parser("represent", help="representation check and theorem-level verdict"))
    p_id = common(sub.add_parser("identify", help="rewrite a do-query observationally"), query=True)
    p_id.add_argument("--depth", type=int, default=12, help="rewrite-depth budget")
    p_id.add_argument("--check", action="store_true",
                      help="also evaluate numerically and assert consistency")
    common(sub.add_parser("eval", help="evaluate a query numerically"), query=True)
    common(sub.add_parser("export-dot", help="emit Graphviz text for the graph"))
    p_rep = common(sub.add_parser("report", help="render figures and a CSV summary"), figures=True)
    p_rep.add_argument("--query", help="optional do-query for an observe/intervene contrast figure")
    return parser


def _emit(args, payload: dict, lines: list, exit_code: int, verdict=None, error=None) -> int:
    if args.format == "json":
        envelope = {
            "tool": "causalcalc",
            "version": __version__,
            "command": args.command,
            "model": getattr(args, "model", None),
            "verdict": verdict,
            "exit_code": exit_code,
            "data": payload,
            "error": error,
        }
        print(json.dumps(envelope, indent=2, sort_keys=True))
    else:
        for line in lines:
            print(line)
        if error:
            print("error: %s" % error, file=sys.stderr)
    return exit_code


def _load(args) -> tuple:
    built = load_model(args.model)
    markov, family = materialize(built, seed=args.seed)
    return built, markov, family


def _effective_graph(built: BuiltModel, family: BeliefFamily) -> Dag:
    if built.graph.edges or built.cpts is not None:
        return built.graph
    return causal_graph(family)


def cmd_validate(args) -> int:
    built = load_model(args.model)
    data = {
        "model_name": built.name,
        "variables": [
            {"name": n, "card": built.space.card(n), "labels": list(built.labels.get(n, ()))}
            for n in built.space.names
        ],
        "edges": [list(e) for e in sorted(built.graph.edges)],
        "has_cpts": built.cpts is not None,
        "belief_policies": len(built.belief_tables),
        "generate_markov": built.generate_markov,
    }
    lines = [
        "model %s: %d variable(s), %d edge(s)"
        % (built.name, len(built.space.names), len(built.graph.edges)),
        "cpts: %s; explicit belief blocks: %d%s"
        % (
            "yes" if built.cpts is not None else "no",
            len(built.belief_tables),
            " (+ markov fill)" if built.generate_markov else "",
        ),
        "ok",
    ]
    return _emit(args, data, lines, OK, verdict="pass")


def _parse_sets(raw: str, built: BuiltModel) -> tuple:
    groups = raw.split(";")
    if len(groups) > 3:
        raise ParseError("--sets takes at most three ;-separated groups", 1, 1)
    while len(groups) < 3:
        groups.append("")
    out = []
    for group in groups:
        names = tuple(n.strip() for n in group.split(",") if n.strip())
        for n in names:
            if n not in built.space:
                raise ParseError("unknown variable %r in --sets" % n, 1, 1)
        out.append(names)
    all_names = [n for g in out for n in g]
    if len(set(all_names)) != len(all_names):
        raise ParseError("--sets groups must be disjoint", 1, 1)
    return tuple(out)


def cmd_dsep(args) -> int:
    built = load_model(args.model)
    i_set, j_set, k_set = _parse_sets(args.sets, built)
    g = built.graph
    separated = g.d_separates(k_set, i_set, j_set)
    agrees = True
    if i_set and j_set:
        agrees = g.blocks(i_set, j_set, k_set) == separated
    data = {
        "sets": {"i": list(i_set), "j": list(j_set), "k": list(k_set)},
        "d_separated": separated,
        "blocks_agrees": agrees,
    }
    lines = ["d-separated: %s" % str(separated).lower()]
    if not agrees:
        lines.append("WARNING: blocks() disagrees with d_separates(); this is a bug")
    return _emit(args, data, lines, OK if agrees else CHECK_FAILED,
                 verdict="pass" if agrees else "fail")


def _axiom_reports(family, tol, max_vars):
    reports = [check_assumption1(family, tol), check_axiom2(family, tol)]
    cycle = None
    if reports[-1].passed:
        g = causal_graph(family, tol)
        reports.append(check_axiom3(family, g, max_vars=max_vars))
        reports.append(check_axiom4(family, g, tol=tol, max_vars=max_vars))
        reports.append(check_axiom6(family, g, tol=tol, max_vars=max_vars))
    else:
        cycle = reports[-1].violations[0][1]
    return reports, cycle


def cmd_axioms(args) -> int:
    _, _, family = _load(args)
    reports, cycle = _axiom_reports(family, args.tol, args.max_vars)
    all_passed = all(r.passed for r in reports)
    data = {
        "reports": [
            {
                "id": r.axiom_id,
                "passed": r.passed,
                "violation_count": len(r.violations),
                "first_violation": repr(r.violations[0]) if r.violations else None,
                "notes": list(r.notes),
            }
            for r in reports
        ],
        "all_passed": all_passed,
        "cycle": list(cycle) if cycle else None,
    }
    lines = [str(r) for r in reports]
    lines.append("all checks pass" if all_passed else "violations found")
    return _emit(args, data, lines, OK if all_passed else CHECK_FAILED,
                 verdict="pass" if all_passed else "fail")


def cmd_discover(args) -> int:
    _, _, family = _load(args)
    try:
        g = causal_graph(family, args.tol)
    except CycleError as err:
        data = {"edges": None, "cycle": list(err.cycle)}
        return _emit(args, data, [], CHECK_FAILED, verdict="fail", error=str(err))
    data = {
        "edges": [list(e) for e in sorted(g.edges)],
        "indirect_causes": {
            n: sorted(indirect_causes(family, n)) for n in family.space.names
        },
    }
    lines = ["%s -> %s" % e for e in sorted(g.edges)] or ["(no edges)"]
    return _emit(args, data, lines, OK, verdict="pass")


def cmd_represent(args) -> int:
    _, _, family = _load(args)
    try:
        g = causal_graph(family, args.tol)
    except CycleError as err:
        return _emit(args, {"represents": False, "cycle": list(err.cycle)},
                     [], CHECK_FAILED, verdict="fail", error=str(err))
    verdict = represents_family(g, family, args.tol)
    thm = theorem1_verdict(family, args.tol, max_vars=args.max_vars)
    data = {
        "represents": verdict.represents,
        "edges": [list(e) for e in sorted(g.edges)],
        "failures": [repr(f) for f in verdict.failures],
        "theorem1": {
            "axioms_pass": thm.axioms_pass,
            "represents": thm.represents,
            "agree": thm.agree,
        },
    }
    lines = [
        "causal graph: %s" % (", ".join("%s->%s" % e for e in sorted(g.edges)) or "(edgeless)"),
        "represents family: %s" % str(verdict.represents).lower(),
        "axioms %s / representation %s / agree %s"
        % tuple(str(b).lower() for b in (thm.axioms_pass, thm.represents, thm.agree)),
    ]
    ok = verdict.represents and thm.agree
    return _emit(args, data, lines, OK if ok else CHECK_FAILED,
                 verdict="pass" if ok else "fail")


def cmd_identify(args) -> int:
    built, markov, family = _load(args)
    raw = parse_query(args.query)
    query = resolve_query(raw, built)
    g = _effective_graph(built, family)
    result = identify(g, built.space, query, depth_limit=args.depth)
    if isinstance(result, NotIdentified):
        data = {"identified": False, "reason": result.reason, "depth_limit": result.depth_limit}
        return _emit(args, data, [result.reason], CHECK_FAILED, verdict="fail")
    formula = result.render()
    data = {
        "identified": True,
        "formula": formula,
        "trace": list(result.trace),
        "depth_limit": args.depth,
    }
    lines = [formula]
    exit_code = OK
    if args.check:
        numeric = _eval_query(markov, family, query)
        symbolic = result.evaluate(family.observational())
        consistent = abs(numeric - symbolic) <= max(args.tol, 1e-9)
        data["check"] = {
            "formula_value": symbolic,
            "do_probability": numeric,
            "consistent": consistent,
        }
        lines.append("numeric: formula=%.12g do=%.12g (%s)"
                     % (symbolic, numeric, "consistent" if consistent else "MISMATCH"))
        if not consistent:
            exit_code = CHECK_FAILED
    return _emit(args, data, lines, exit_code,
                 verdict="pass" if exit_code == OK else "fail")


def _eval_query(markov, family: BeliefFamily, query) -> float:
    if markov is not None:
        return do_probability(markov, query)
    table = family.table(Policy(family.space, query.intervened.items))
    if len(query.observed):
        cond = table.conditional(query.target.variables, query.observed)
        return float(cond.probs[query.target.values])
    return table.prob(query.target)


def cmd_eval(args) -> int:
    built, markov, family = _load(args)
    query = resolve_query(parse_query(args.query), built)
    value = _eval_query(markov, family, query)
    data = {"query": args.query, "value": value}
    return _emit(args, data, ["%.12g" % value], OK, verdict="pass")


def cmd_export_dot(args) -> int:
    built = load_model(args.model)
    dot = built.graph.to_dot(built.name)
    return _emit(args, {"dot": dot}, [dot.rstrip("\n")], OK, verdict="pass")


def cmd_report(args) -> int:
    from .report import write_report

    built, markov, family = _load(args)
    query = None
    if args.query:
        query = resolve_query(parse_query(args.query), built)
    g = _effective_graph(built, family)
    written = write_report(
        family, g, args.out,
        labels=built.labels, query=query, tol=args.tol, max_vars=args.max_vars,
    )
    data = {"outputs": written}
    return _emit(args, data, ["wrote %s" % p for p in written], OK, verdict="pass")


_HANDLERS = {
    "validate": cmd_validate,
    "dsep": cmd_dsep,
    "axioms": cmd_axioms,
    "discover": cmd_discover,
    "represent": cmd_represent,
    "identify": cmd_identify,
    "eval": cmd_eval,
    "export-dot": cmd_export_dot,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    model = getattr(args, "model", None)
    if model is not None and not Path(model).exists():
        print("error: model file %r does not exist" % model, file=sys.stderr)
        return USAGE
    try:
        return _HANDLERS[args.command](args)
    except ParseError as err:
        print("error: %s" % err, file=sys.stderr)
        return USAGE
    except (EngineError, ValueError) as err:
        print("error: %s" % err, file=sys.stderr)
        return CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())
