"""``gridsight`` command line.

Every analysis command prints one JSON report (or a plain table with
``--format table``).  Exit codes: 0 ok, 1 bad input, 2 the analysis answered
"no" (unobservable, not stealthy, nothing found), 64 usage error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

from . import oracle as orc
from .critical_sets import all_critical_sets, split_tree
from .matching import HallViolation
from .model import Case, GridSightError, bundled_case, load_case
from .observability import SpanningTreeCertificate, boundary_injections, build_assignment
from .security import (NoCoveringSet, assess_removal, build_csm_graph, full_defense,
                       sparsest_attack, sparsest_attack_including, structural_verdict,
                       threshold_defense)

EX_OK, EX_INPUT, EX_NEGATIVE, EX_USAGE = 0, 1, 2, 64
DEFAULT_CASE = "ieee14_paper.json"


class _Usage(Exception):
    pass


class _Negative(Exception):
    def __init__(self, result: dict):
        self.result = result


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _Usage(f"{self.format_usage()}{self.prog}: error: {message}\n")


# ---- helpers -------------------------------------------------------------

def _load(spec: str) -> Case:
    path = Path(spec)
    if path.exists():
        return load_case(path)
    try:
        return bundled_case(spec)
    except FileNotFoundError:
        raise GridSightError(f"no such case file: {spec}") from None


def _seed(args) -> int:
    env = os.environ.get("GRIDSIGHT_SEED")
    if env is not None:
        try:
            return int(env, 0)
        except ValueError:
            raise GridSightError(f"GRIDSIGHT_SEED is not an integer: {env!r}") from None
    return args.seed


def _jacobian(case: Case, seed: int) -> orc.JacobianMatrix:
    if all(ln.susceptance is not None for ln in case.lines):
        return orc.build_jacobian(case)
    return orc.build_jacobian(case, orc.RandomGeneric(seed))


def _ids(case: Case, text: str) -> list[int]:
    tokens = [t.strip() for t in text.split(",") if t.strip()]
    if not tokens:
        raise GridSightError("empty measurement list")
    return sorted({case.resolve(t) for t in tokens})


def _read_id_file(case: Case, path: str) -> list[int]:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise GridSightError(f"cannot read measurement file {path}: {exc}") from None
    if not isinstance(data, list):
        raise GridSightError(f"{path}: expected a JSON list of measurement ids")
    return sorted({case.resolve(x) for x in data})


def _certificate(case: Case) -> SpanningTreeCertificate:
    cert = build_assignment(case)
    if not cert:
        raise _Negative({"observable": False,
                         "components": [sorted(g) for g in cert.components]})
    return cert


def _fraction(x) -> str:
    return str(x)


# ---- commands ------------------------------------------------------------

def cmd_observability(case, args, ctx):
    cert = build_assignment(case)
    check = None
    if args.oracle:
        rank = orc.rank_of(_jacobian(case, ctx["seed"]))
        check = {"rank": rank, "passed": (rank == case.n_buses - 1) == bool(cert)}
    if not cert:
        raise _Negative({"observable": False,
                         "components": [sorted(g) for g in cert.components]})
    result = {
        "observable": True,
        "branches": sorted(cert.branches),
        "assignment": [{"measurement": case.label(m), "line": ln}
                       for m, ln in sorted(cert.assignment.items())],
        "boundary_injections": case.labels(sorted(boundary_injections(case, cert))),
    }
    rows = [(case.label(m), str(ln)) for m, ln in sorted(cert.assignment.items())]
    return result, check, (("measurement", "line"), rows)


def cmd_critical_sets(case, args, ctx):
    cert = _certificate(case)
    sets = all_critical_sets(case, cert)
    result = {"critical_sets": [
        {"owner": case.label(m),
         "members": case.labels(cs.sorted_members()),
         "provenance": {case.label(k): p.kind for k, p in cs.provenance.items()}}
        for m, cs in sets.items()]}
    check = None
    if args.oracle:
        H = _jacobian(case, ctx["seed"])
        reports = {case.label(m): orc.verify_critical_set(H, cs, cert) for m, cs in sets.items()}
        check = {"passed": all(r.passed for r in reports.values()),
                 "failed": sorted(k for k, r in reports.items() if not r.passed)}
    rows = [(case.label(m), "{" + ", ".join(case.labels(cs.sorted_members())) + "}")
            for m, cs in sets.items()]
    return result, check, (("measurement", "critical set"), rows)


def cmd_sparsest_attack(case, args, ctx):
    include = case.resolve(args.include) if args.include else None
    if args.protected:
        # critical sets say nothing about protected meters: enumerate
        protected = _read_id_file(case, args.protected)
        H = _jacobian(case, ctx["seed"])
        found = orc.brute_force_sparsest(H, args.max_card, include, protected)
        if not found:
            raise _Negative({"method": "brute-force", "found": False,
                             "max_card": args.max_card})
        members, k = found
        result = {"method": "brute-force", "members": case.labels(sorted(members)),
                  "cardinality": k, "protected": case.labels(protected)}
        return result, None, (("cardinality", "attack"), [(str(k), ", ".join(result["members"]))])
    cert = _certificate(case)
    sets = all_critical_sets(case, cert)
    try:
        if include is None:
            members, k = sparsest_attack(sets)
        else:
            members, k = sparsest_attack_including(sets, include)
    except NoCoveringSet:
        raise _Negative({"method": "critical-sets", "found": False,
                         "include": case.label(include)}) from None
    owner = min(m for m, cs in sets.items() if cs.members == members)
    ordered = sets[owner].sorted_members()
    result = {"method": "critical-sets", "owner": case.label(owner),
              "members": case.labels(ordered), "cardinality": k}
    if include is not None:
        result["include"] = case.label(include)
    check = None
    if args.oracle:
        H = _jacobian(case, ctx["seed"])
        realizable = isinstance(orc.support_realizable(H, members), orc.AttackVector)
        bound = min(k, orc.MAX_ENUMERATION)
        bf = orc.brute_force_sparsest(H, bound, include)
        bf_k = bf[1] if bf else None
        check = {"realizable": realizable, "brute_force_cardinality": bf_k,
                 "passed": realizable and (bf_k == k or (bf_k is None and k > bound))}
    return result, check, (("cardinality", "attack"), [(str(k), ", ".join(result["members"]))])


def cmd_defense(case, args, ctx):
    cert = _certificate(case)
    if args.all:
        plan = full_defense(cert)
        budget = 4
    else:
        if args.tau < 2:
            raise GridSightError("--tau must be at least 2")
        plan = threshold_defense(all_critical_sets(case, cert), args.tau)
        budget = min(args.tau - 1, orc.MAX_ENUMERATION)
        if isinstance(plan, HallViolation):
            raise _Negative({"guarantee": {"threshold": args.tau}, "hall_violation": {
                "sets": case.labels(plan.witness), "union": case.labels(sorted(plan.union))}})
    result = {
        "guarantee": "all" if args.all else {"threshold": args.tau},
        "protected": case.labels(sorted(plan.protected)),
        "representatives": {case.label(o): case.label(m)
                            for o, m in sorted(plan.representatives.items())},
    }
    check = None
    if args.oracle:
        H = _jacobian(case, ctx["seed"])
        found = orc.brute_force_sparsest(H, budget, protected=plan.protected)
        check = {"max_card": budget, "passed": not found,
                 "counterexample": case.labels(sorted(found[0])) if found else None}
    rows = [(case.label(o), case.label(m)) for o, m in sorted(plan.representatives.items())]
    return result, check, (("critical set", "protected"), rows)


def cmd_verify_attack(case, args, ctx):
    attacked = _ids(case, args.measurements)
    cert = _certificate(case)
    g = build_csm_graph(all_critical_sets(case, cert), case.measurement_ids)
    v = assess_removal(g, attacked)
    s = structural_verdict(case, attacked)
    result = {
        "attacked": case.labels(attacked),
        "stealthy": v.stealthy,
        "deficiency": v.deficiency,
        "unmatched": case.labels(v.unmatched),
        "strictness_failures": case.labels(v.strictness_failures),
        "structural": {"stealthy": s.stealthy, "rank_loss": s.deficiency},
    }
    check = None
    if args.oracle:
        H = _jacobian(case, ctx["seed"])
        vec = orc.support_realizable(H, attacked)
        check = {"realizable": isinstance(vec, orc.AttackVector)}
        if isinstance(vec, orc.AttackVector):
            dev = orc.residual_invariance(H, orc.NoiseModel.uniform(len(H.rows), seed=ctx["seed"]),
                                          vec.c, args.trials)
            check["state"] = [_fraction(x) for x in vec.c]
            check["residual_deviation_ok"] = dev <= 1e-9
        else:
            check["reason"] = vec.reason
        check["passed"] = check["realizable"] == v.stealthy
    rows = [("stealthy", str(v.stealthy)), ("deficiency", str(v.deficiency)),
            ("unmatched", ", ".join(result["unmatched"]))]
    if not v.stealthy:
        raise _Negative(result)
    return result, check, (("field", "value"), rows)


def cmd_oracle(case, args, ctx):
    H = _jacobian(case, ctx["seed"])
    n = H.n_states
    if args.task == "rank":
        keep = [m for m in H.rows if m not in set(_ids(case, args.without))] \
            if args.without else list(H.rows)
        r = orc.rank_of(H, keep)
        result = {"rank": r, "states": n, "without": case.labels(sorted(set(H.rows) - set(keep)))}
        return result, None, (("rank", "states"), [(str(r), str(n))])
    if args.task == "realizable":
        A = _ids(case, args.measurements)
        vec = orc.support_realizable(H, A)
        if not isinstance(vec, orc.AttackVector):
            raise _Negative({"support": case.labels(A), "realizable": False, "reason": vec.reason})
        result = {"support": case.labels(A), "realizable": True,
                  "state": [_fraction(x) for x in vec.c],
                  "attack": {case.label(m): _fraction(x) for m, x in vec.a.items() if x}}
        return result, None, (("measurement", "attack"), sorted(result["attack"].items()))
    if args.task == "brute-force":
        include = case.resolve(args.include) if args.include else None
        protected = _read_id_file(case, args.protected) if args.protected else []
        found = orc.brute_force_sparsest(H, args.max_card, include, protected)
        if not found:
            raise _Negative({"found": False, "max_card": args.max_card})
        members, k = found
        result = {"found": True, "members": case.labels(sorted(members)), "cardinality": k}
        return result, None, (("cardinality", "attack"), [(str(k), ", ".join(result["members"]))])
    # residual
    if args.state:
        c = [orc.Fraction(x) for x in args.state.split(",")]
        if len(c) != n:
            raise GridSightError(f"state needs {n} entries, got {len(c)}")
    elif args.measurements:
        vec = orc.support_realizable(H, _ids(case, args.measurements))
        if not isinstance(vec, orc.AttackVector):
            raise _Negative({"realizable": False, "reason": vec.reason})
        c = vec.c
    else:
        c = [orc.Fraction(int(j == 0)) for j in range(n)]
    dev = orc.residual_invariance(H, orc.NoiseModel.uniform(len(H.rows), seed=ctx["seed"]),
                                  c, args.trials)
    result = {"trials": args.trials, "max_deviation": float(f"{dev:.3e}"),
              "within_tolerance": dev <= 1e-9}
    return result, None, (("trials", "max deviation"), [(str(args.trials), f"{dev:.3e}")])


# ---- DOT export ----------------------------------------------------------

def _q(text) -> str:
    return '"' + str(text).replace('"', '\\"') + '"'


def dot_network(case: Case, cert=None, split=None) -> str:
    lines = ["graph network {", "  node [shape=circle];"]
    measured = {m.target for m in case.measurements if m.is_flow}
    injected = {m.target for m in case.measurements if m.is_injection}
    if split is None:
        groups = [("", case.bus_ids)]
    else:
        groups = [("n1", sorted(split.n1)), ("n2", sorted(split.n2))]
    for name, buses in groups:
        indent = "  "
        if name:
            lines.append(f"  subgraph cluster_{name} {{")
            lines.append(f"    label={_q(name)};")
            indent = "    "
        for b in buses:
            style = ", style=filled" if b in injected else ""
            lines.append(f"{indent}{_q(f'b{b}')} [label={_q(b)}{style}];")
        if name:
            lines.append("  }")
    for ln in case.lines:
        attrs = [f"label={_q(ln.id)}"]
        if cert is not None and ln.id in cert.branches:
            attrs.append("penwidth=2")
        if ln.id in measured:
            attrs.append("color=red")
        if split is not None and ln.id in split.cut_lines:
            attrs.append("style=dashed")
        lines.append(f"  {_q(f'b{ln.from_bus}')} -- {_q(f'b{ln.to_bus}')} [{', '.join(attrs)}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def dot_csm(case: Case, sets) -> str:
    g = build_csm_graph(sets, case.measurement_ids)
    matched = {(g.graph.left[i], g.graph.right[j]) for i, j in g.baseline.pairs.items()}
    lines = ["graph csm {", "  rankdir=LR;"]
    lines.append("  { rank=same;")
    for o in g.owners:
        lines.append(f"    {_q('C_' + case.label(o))} [shape=box];")
    lines.append("  }")
    lines.append("  { rank=same;")
    for m in g.measurements:
        lines.append(f"    {_q('m_' + case.label(m))} [shape=ellipse];")
    lines.append("  }")
    for i, j in sorted(g.graph.edges):
        o, m = g.graph.left[i], g.graph.right[j]
        bold = " [penwidth=2]" if (o, m) in matched else ""
        lines.append(f"  {_q('C_' + case.label(o))} -- {_q('m_' + case.label(m))}{bold};")
    lines.append("}")
    return "\n".join(lines) + "\n"


def cmd_export(case, args, ctx):
    if args.which == "network":
        cert = build_assignment(case)
        text = dot_network(case, cert or None)
    elif args.which == "csm":
        text = dot_csm(case, all_critical_sets(case, _certificate(case)))
    else:
        if not args.owner:
            raise GridSightError("export split needs --owner")
        cert = _certificate(case)
        text = dot_network(case, cert, split_tree(case, cert, case.resolve(args.owner)))
    if args.output:
        Path(args.output).write_text(text)
    result = {"which": args.which, "output": args.output, "dot": None if args.output else text}
    return result, None, None


COMMANDS = {
    "observability": cmd_observability,
    "critical-sets": cmd_critical_sets,
    "sparsest-attack": cmd_sparsest_attack,
    "defense": cmd_defense,
    "verify-attack": cmd_verify_attack,
    "oracle": cmd_oracle,
    "export": cmd_export,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--case", default=DEFAULT_CASE,
                        help="case file (JSON or MATPOWER .m) or bundled case name")
    common.add_argument("--seed", type=lambda s: int(s, 0), default=orc.DEFAULT_SEED,
                        help="seed for generic susceptances and noise (GRIDSIGHT_SEED overrides)")
    common.add_argument("--format", choices=("json", "table"), default="json")
    common.add_argument("--oracle", action="store_true",
                        help="attach the exact linear-algebra cross-check")

    p = _Parser(prog="gridsight", description="Observability and stealthy-attack analysis "
                "of DC state estimation.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True
    sub.add_parser("observability", parents=[common])
    sub.add_parser("critical-sets", parents=[common])

    sp = sub.add_parser("sparsest-attack", parents=[common])
    sp.add_argument("--include", metavar="ID")
    sp.add_argument("--protected", metavar="FILE", help="JSON list of protected measurement ids")
    sp.add_argument("--max-card", type=int, default=4)

    d = sub.add_parser("defense", parents=[common])
    mode = d.add_mutually_exclusive_group(required=True)
    mode.add_argument("--all", action="store_true")
    mode.add_argument("--tau", type=int, metavar="N")

    v = sub.add_parser("verify-attack", parents=[common])
    v.add_argument("--measurements", required=True, metavar="ID,ID,...")
    v.add_argument("--trials", type=int, default=100)

    o = sub.add_parser("oracle", parents=[common])
    o.add_argument("task", choices=("rank", "realizable", "brute-force", "residual"))
    o.add_argument("--measurements", metavar="ID,ID,...")
    o.add_argument("--without", metavar="ID,ID,...")
    o.add_argument("--include", metavar="ID")
    o.add_argument("--protected", metavar="FILE")
    o.add_argument("--max-card", type=int, default=3)
    o.add_argument("--state", metavar="X,X,...")
    o.add_argument("--trials", type=int, default=100)

    e = sub.add_parser("export", parents=[common])
    e.add_argument("which", choices=("csm", "network", "split"))
    e.add_argument("--owner", metavar="ID", help="measurement whose split to draw")
    e.add_argument("--output", "-o", metavar="PATH")
    return p


def _table(header, rows) -> str:
    rows = [tuple(map(str, r)) for r in rows]
    widths = [max(len(x) for x in col) for col in zip(header, *rows)]
    fmt = "  ".join(f"{{:<{w}}}" for w in widths)
    out = [fmt.format(*header), fmt.format(*("-" * w for w in widths))]
    out += [fmt.format(*r) for r in rows]
    return "\n".join(line.rstrip() for line in out) + "\n"


def run(argv: Optional[Sequence[str]] = None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _Usage as exc:
        stderr.write(str(exc))
        return EX_USAGE
    except SystemExit as exc:  # --help
        return EX_OK if not exc.code else EX_USAGE

    code, table = EX_OK, None
    try:
        case = _load(args.case)
        ctx = {"seed": _seed(args)}
        try:
            result, check, table = COMMANDS[args.command](case, args, ctx)
        except _Negative as neg:
            result, check, code = neg.result, None, EX_NEGATIVE
    except (GridSightError, KeyError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        stderr.write(f"gridsight: error: {msg}\n")
        return EX_INPUT

    if args.format == "table" and table is not None and code == EX_OK:
        stdout.write(_table(*table))
        return code
    if args.command == "export" and args.format == "table" and result.get("dot"):
        stdout.write(result["dot"])
        return code
    report = {
        "command": args.command,
        "case_digest": case.digest(),
        "result": result,
        "oracle_crosscheck": check,
        "generated_at": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    stdout.write(json.dumps(report, indent=2, sort_keys=True) + "\n")
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
