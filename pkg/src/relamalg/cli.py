"""Command-line front end.

Exit codes: 0 success, 1 check or expectation failed, 2 unsupported
signature, 3 oracle exhausted, 4 oracle budget exceeded, 64 usage error,
65 unreadable or invalid input.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from . import counterexamples
from .amalgamation import (
    Amalgam,
    amalgamate,
    amalgamate_transitive,
    amalgamate_union,
    extend_operations,
    superamalgamation_witnesses,
)
from .core import Structure, check_conformance, validate_tba
from .errors import (
    BudgetExceeded,
    ExpectationViolated,
    FormatError,
    Inconsistent,
    RelamalgError,
    UnknownEntry,
    UnsupportedSignature,
)
from .fileformat import amalgam_to_dict, dump_structure, dumps, load_signature, load_structure
from .fraisse import (
    CONSTRUCTIVE,
    RANDOM,
    build_stage,
    check_extension_property,
    check_partial_homogeneity,
)
from .oracle import DEFAULT_BUDGET, search_ap_amalgam, search_strong_amalgam
from .plots import plot_trend
from .solver import BUDGET, EXHAUSTED, FOUND

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_UNSUPPORTED = 2
EXIT_EXHAUSTED = 3
EXIT_BUDGET = 4
EXIT_USAGE = 64
EXIT_DATA = 65

RAW_WARNING = ("warning: raw constructor selected; class preconditions are not checked and "
               "the result may leave the class (for instance a transitive recipe on an "
               "antisymmetric relation that is not transitive)")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _out(text: str, path=None):
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text, encoding="utf-8")


def _load(path) -> Structure:
    try:
        return load_structure(path)
    except OSError as exc:
        raise FormatError(f"cannot read {path}: {exc.strerror or exc}") from exc


def _triple(args):
    return validate_tba(_load(args.a), _load(args.b), _load(args.c))


# -- subcommands --------------------------------------------------------------

def cmd_check(args) -> int:
    report = check_conformance(_load(args.file))
    _out(report.to_text(), args.output)
    return EXIT_OK if report.passed else EXIT_FAILED


def _raw_amalgam(t, method: str) -> Amalgam:
    extents = {}
    for rel in t.signature.relation_names:
        if method == "union":
            extents[rel] = amalgamate_union(t, rel)
        else:
            extents[rel], _ = amalgamate_transitive(t, rel)
    d = extend_operations(t, extents)
    witnesses = {}
    for rel in t.signature.relation_names:
        witnesses[rel] = superamalgamation_witnesses(d, t, rel)[1]
    return Amalgam(d, witnesses)


def cmd_amalgamate(args) -> int:
    t = _triple(args)
    if args.method == "auto":
        result = amalgamate(t)
    else:
        print(RAW_WARNING, file=sys.stderr)
        result = _raw_amalgam(t, args.method)
    _out(dumps(amalgam_to_dict(result)), args.output)
    report = check_conformance(result.d)
    if not report.passed:
        sys.stderr.write("output does not conform:\n" + report.to_text())
        return EXIT_FAILED
    return EXIT_OK


def cmd_oracle(args) -> int:
    t = _triple(args)
    search = search_strong_amalgam if args.mode == "sap" else search_ap_amalgam
    outcome = search(t, args.budget)
    doc = outcome.to_dict()
    doc["mode"] = args.mode
    _out(dumps(doc), args.output)
    return {FOUND: EXIT_OK, EXHAUSTED: EXIT_EXHAUSTED, BUDGET: EXIT_BUDGET}[outcome.status]


_VERDICTS = {
    counterexamples.AP_FAILS: "exhausted as expected",
    counterexamples.SAP_FAILS: "strong search exhausted, identifying search found, as expected",
    counterexamples.MISAPPLICATION: "transitive recipe leaves the class, union recipe conforms, as expected",
}


def cmd_counterexample(args) -> int:
    if args.action == "list":
        lines = [f"{e.name}\t{e.expectation}\t{e.description}" for e in counterexamples.CATALOG.values()]
        _out("\n".join(lines) + "\n")
        return EXIT_OK
    if not args.name:
        raise UsageError("counterexample run needs an entry name")
    name = args.name
    try:
        counterexamples.entry(name)
    except UnknownEntry as exc:
        raise UsageError(f"unknown catalog entry {exc}; try 'counterexample list'") from exc
    if args.export:
        counterexamples.export(name, args.export)
    try:
        report = counterexamples.verify(name, args.budget)
        verdict = _VERDICTS[counterexamples.entry(name).expectation]
        code = EXIT_OK
    except ExpectationViolated as exc:
        report, verdict, code = exc.report, "expectation NOT met", EXIT_FAILED
    _out(report.to_text() + f"{name}: {verdict}\n", args.output)
    return code


def cmd_fraisse(args) -> int:
    sig = load_signature(args.sig)
    checkpoints = sorted({max(1, args.steps * i // 4) for i in range(1, 5)}) if args.trend else []
    history = [] if checkpoints else None
    stage = build_stage(sig, args.steps, args.seed, amalgam=args.amalgam, history=history)
    out = Path(args.output)
    dump_structure(stage, out)
    lines = [f"steps\t{args.steps}", f"seed\t{args.seed}", f"size\t{len(stage)}"]
    for flag, fn in (("check_extension", lambda m, k: check_extension_property(m, sig, k)),
                     ("check_homogeneity", check_partial_homogeneity)):
        k = getattr(args, flag)
        if k is not None:
            lines.append(fn(stage, k).to_text().rstrip("\n"))
    report = "\n".join(lines) + "\n"
    report_path = out.with_name(out.stem + "_report.txt")
    report_path.write_text(report, encoding="utf-8")
    sys.stdout.write(report)
    if checkpoints and history:
        rows = []
        k_ext = args.check_extension if args.check_extension is not None else 1
        k_hom = args.check_homogeneity if args.check_homogeneity is not None else 1
        for step in checkpoints:
            m = history[min(step, len(history)) - 1]
            rows.append({"steps": step,
                         f"extension k={k_ext}": check_extension_property(m, sig, k_ext).fraction,
                         f"homogeneity k={k_hom}": check_partial_homogeneity(m, k_hom).fraction})
        header = list(rows[0])
        tsv = ["\t".join(header)] + ["\t".join(f"{r[h]:.6f}" if isinstance(r[h], float) else str(r[h])
                                               for h in header) for r in rows]
        out.with_name(out.stem + "_trend.tsv").write_text("\n".join(tsv) + "\n", encoding="utf-8")
        plot_trend(rows, out.with_name(out.stem + "_trend.png"))
    return EXIT_OK


def _dot_id(token: str) -> str:
    return '"' + token.replace("\\", "\\\\").replace('"', '\\"') + '"'


def to_dot(s: Structure) -> str:
    """One digraph per relation; relations coarser than another use dashed edges."""
    coarser = {c for _, c in s.signature.coarser_than}
    blocks = []
    for rel in s.signature.relation_names:
        style = " [style=dashed]" if rel in coarser else ""
        lines = [f"digraph {_dot_id(rel)} {{"]
        lines += [f"  {_dot_id(x)};" for x in s.order]
        lines += [f"  {_dot_id(x)} -> {_dot_id(y)}{style};" for x, y in sorted(s.extent(rel))]
        lines.append("}")
        blocks.append("\n".join(lines))
    return "\n".join(blocks) + "\n"


def cmd_export_dot(args) -> int:
    _out(to_dot(_load(args.file)), args.output)
    return EXIT_OK


# -- parser -------------------------------------------------------------------

def _nonneg(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be non-negative: {v}")
    return v


def make_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="relamalg", description="Amalgamation of finite relational structures.")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    c = sub.add_parser("check", help="conformance report for a structure file")
    c.add_argument("file")
    c.add_argument("-o", "--output")
    c.set_defaults(func=cmd_check)

    def triple_args(q):
        q.add_argument("--a", required=True)
        q.add_argument("--b", required=True)
        q.add_argument("--c", required=True)

    a = sub.add_parser("amalgamate", help="strong amalgam of a triple")
    triple_args(a)
    a.add_argument("--method", choices=("auto", "union", "transitive"), default="auto")
    a.add_argument("-o", "--output", required=True)
    a.set_defaults(func=cmd_amalgamate)

    o = sub.add_parser("oracle", help="exhaustive amalgam search")
    triple_args(o)
    o.add_argument("--mode", choices=("sap", "ap"), required=True)
    o.add_argument("--budget", type=_nonneg, default=DEFAULT_BUDGET)
    o.add_argument("-o", "--output")
    o.set_defaults(func=cmd_oracle)

    x = sub.add_parser("counterexample", help="list or verify catalog entries")
    x.add_argument("action", choices=("list", "run"))
    x.add_argument("name", nargs="?")
    x.add_argument("--budget", type=_nonneg, default=DEFAULT_BUDGET)
    x.add_argument("--export", metavar="DIR", help="also write the triple as structure files")
    x.add_argument("-o", "--output")
    x.set_defaults(func=cmd_counterexample)

    f = sub.add_parser("fraisse", help="build a finite stage and check it")
    f.add_argument("--sig", required=True)
    f.add_argument("--steps", type=_nonneg, required=True)
    f.add_argument("--seed", type=int, required=True)
    f.add_argument("--check-extension", type=_nonneg, metavar="K")
    f.add_argument("--check-homogeneity", type=_nonneg, metavar="K")
    f.add_argument("--amalgam", choices=(RANDOM, CONSTRUCTIVE), default=RANDOM)
    f.add_argument("--trend", action="store_true",
                   help="also write coverage at quarter checkpoints as TSV and PNG")
    f.add_argument("-o", "--output", required=True)
    f.set_defaults(func=cmd_fraisse)

    d = sub.add_parser("export-dot", help="Graphviz rendering of a structure")
    d.add_argument("file")
    d.add_argument("-o", "--output", required=True)
    d.set_defaults(func=cmd_export_dot)
    return p


def run(argv=None) -> int:
    try:
        args = make_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except UnsupportedSignature as exc:
        print(f"unsupported signature: {exc}", file=sys.stderr)
        return EXIT_UNSUPPORTED
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except (FormatError, Inconsistent) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_DATA
    except RelamalgError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
