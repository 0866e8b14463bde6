"""Catalog of triples that admit no amalgam (or only a non-strong one).

Each entry builds a valid triple inside its class and states what the oracle
must find.  :func:`verify` runs the matching search and raises
:class:`ExpectationViolated` when the verdict differs.  :func:`ablate` builds
the same data with the offending axiom removed, where an amalgam exists.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Callable

from .amalgamation import amalgamate_transitive, amalgamate_union
from .core import (
    ANTIREFLEXIVE,
    ANTISYMMETRIC,
    REFLEXIVE,
    SYMMETRIC,
    TRANSITIVE,
    OperationSpec,
    ReportEntry,
    Signature,
    Structure,
    TbaTriple,
    VerificationReport,
    check_conformance,
    find_isomorphism,
    validate_tba,
)
from .errors import ExpectationViolated, UnknownEntry
from .fileformat import dump_structure, dumps
from .oracle import (
    DEFAULT_BUDGET,
    ap_equivalence_strict,
    ap_maps,
    search_ap_amalgam,
    search_order_expansion,
    search_strong_amalgam,
)
from .solver import EXHAUSTED, FOUND

ORDER = frozenset({TRANSITIVE, REFLEXIVE, ANTISYMMETRIC})
EQUIVALENCE = frozenset({TRANSITIVE, REFLEXIVE, SYMMETRIC})

SAP_FAILS = "sap_fails"
AP_FAILS = "ap_fails"
MISAPPLICATION = "construction_misapplication"


def _loops(domain):
    return {(x, x) for x in domain}


def _triple(sig, c_dom, a_new, b_new, ext_c, ext_a, ext_b, tab_c=None, tab_a=None, tab_b=None):
    """Build A and B as C plus new elements; ext_* give the extra pairs per relation."""
    tab_c = tab_c or {}
    c = Structure(sig, c_dom, ext_c, tab_c)

    def side(new, extra, tabs):
        dom = set(c_dom) | set(new)
        ext = {r: set(ext_c.get(r, ())) | set(extra.get(r, ())) for r in sig.relation_names}
        tables = {op: {**tab_c.get(op, {}), **(tabs or {}).get(op, {})} for op in sig.operation_names}
        return Structure(sig, dom, ext, tables)

    return validate_tba(side(a_new, ext_a, tab_a), side(b_new, ext_b, tab_b), c)


# -- builders -----------------------------------------------------------------

def _thm31c(preserve_s=True):
    ops = (OperationSpec("f", frozenset({"S"}) if preserve_s else frozenset()),)
    sig = Signature((("R", {TRANSITIVE}), ("S", frozenset())), {("R", "S")}, ops)
    ident = {"c1": "c1", "c2": "c2", "c3": "c3"}
    return sig, _triple(
        sig, ["c1", "c2", "c3"], ["a"], ["b"],
        {"S": {("c1", "c2"), ("c2", "c3")}},
        {"R": {("a", "c2")}, "S": {("a", "c2")}},
        {"R": {("c2", "b")}, "S": {("c2", "b")}},
        {"f": ident}, {"f": {"a": "c1"}}, {"f": {"b": "c3"}})


def _thm31d(preserve_s=True):
    ops = (OperationSpec("f", frozenset({"S1"}) if preserve_s else frozenset()),)
    sig = Signature((("le", ORDER), ("S1", {REFLEXIVE, SYMMETRIC})), {("le", "S1")}, ops)
    c_dom = ["c1", "c2", "c3"]
    s_c = {("c1", "c2"), ("c2", "c1"), ("c2", "c3"), ("c3", "c2")} | _loops(c_dom)
    return sig, _triple(
        sig, c_dom, ["a"], ["b"],
        {"le": _loops(c_dom), "S1": s_c},
        {"le": {("a", "a"), ("a", "c2")}, "S1": {("a", "a"), ("a", "c2"), ("c2", "a")}},
        {"le": {("b", "b"), ("c2", "b")}, "S1": {("b", "b"), ("c2", "b"), ("b", "c2")}},
        {"f": {x: x for x in c_dom}}, {"f": {"a": "c1"}}, {"f": {"b": "c3"}})


def _prop35(props_orders, with_loops, s_props=frozenset({ANTISYMMETRIC})):
    sig = Signature((("le", props_orders), ("le2", props_orders), ("S", s_props)),
                    {("le", "S"), ("le2", "S")})
    c_dom = ["c", "d"]
    loops_c = _loops(c_dom) if with_loops else set()
    la = {("a", "a")} if with_loops else set()
    lb = {("b", "b")} if with_loops else set()
    return sig, _triple(
        sig, c_dom, ["a"], ["b"],
        {"le": loops_c, "le2": loops_c, "S": loops_c},
        {"le": la | {("c", "a")}, "le2": la | {("a", "d")}, "S": la | {("c", "a"), ("a", "d")}},
        {"le": lb | {("b", "c")}, "le2": lb | {("d", "b")}, "S": lb | {("b", "c"), ("d", "b")}})


def _prop35a(antisymmetric=True):
    return _prop35(ORDER, True, frozenset({ANTISYMMETRIC}) if antisymmetric else frozenset())


def _prop35b(antisymmetric=True):
    return _prop35(frozenset({TRANSITIVE}), False,
                   frozenset({ANTISYMMETRIC}) if antisymmetric else frozenset())


def _prop35c(antisymmetric=True):
    # "ge" holds (x, y) when x >= y; it is the relation finer than S
    ops = (OperationSpec("f", frozenset({"S"}), bijective=True),)
    s_props = frozenset({ANTISYMMETRIC}) if antisymmetric else frozenset()
    sig = Signature((("ge", ORDER), ("S", s_props)), {("ge", "S")}, ops)
    c_dom = ["c1", "c2", "d1", "d2"]
    swap = {"c1": "c2", "c2": "c1", "d1": "d2", "d2": "d1"}
    a_loops, b_loops = _loops(["a1", "a2"]), _loops(["b1", "b2"])
    return sig, _triple(
        sig, c_dom, ["a1", "a2"], ["b1", "b2"],
        {"ge": _loops(c_dom), "S": _loops(c_dom)},
        {"ge": a_loops | {("a1", "c1"), ("d2", "a2")},
         "S": a_loops | {("a1", "c1"), ("d2", "a2"), ("d1", "a1"), ("a2", "c2")}},
        {"ge": b_loops | {("c1", "b1"), ("b2", "d2")},
         "S": b_loops | {("c1", "b1"), ("b2", "d2"), ("b1", "d1"), ("c2", "b2")}},
        {"f": swap}, {"f": {"a1": "a2", "a2": "a1"}}, {"f": {"b1": "b2", "b2": "b1"}})


def _prop42(strict=True):
    sig = Signature.single({TRANSITIVE, REFLEXIVE},
                           (OperationSpec("f", frozenset({"R"}), strict=strict),))
    c_dom = ["c", "d", "e"]
    return sig, _triple(
        sig, c_dom, ["a"], ["b"],
        {"R": _loops(c_dom) | {("d", "e"), ("e", "d")}},
        {"R": {("a", "c"), ("a", "a")}},
        {"R": {("c", "b"), ("b", "b")}},
        {"f": {"d": "e", "e": "d", "c": "d"}}, {"f": {"a": "e"}}, {"f": {"b": "e"}})


def _ex43sap(strict=True):
    sig = Signature.single(EQUIVALENCE, (OperationSpec("f", frozenset({"R"}), strict=strict),))
    c_dom = ["c", "d1", "d2"]
    return sig, _triple(
        sig, c_dom, ["a"], ["b"],
        {"R": _loops(c_dom) | {("d1", "d2"), ("d2", "d1")}},
        {"R": {("a", "a"), ("a", "c"), ("c", "a")}},
        {"R": {("b", "b"), ("b", "c"), ("c", "b")}},
        {"f": {"c": "d1", "d1": "d1", "d2": "d2"}}, {"f": {"a": "d2"}}, {"f": {"b": "d2"}})


def _rem33(closing_edge=True):
    sig = Signature.single({ANTIREFLEXIVE}, name="E")
    b_edges = {("d", "b"), ("b", "c")} if closing_edge else {("d", "b")}
    return sig, _triple(sig, ["c", "d"], ["a"], ["b"], {},
                        {"E": {("c", "a"), ("a", "d")}}, {"E": b_edges})


def _rem41():
    sig = Signature.single({ANTISYMMETRIC})
    return sig, _triple(sig, ["c", "d"], ["a"], ["b"], {},
                        {"R": {("c", "a"), ("a", "d")}}, {"R": {("d", "b"), ("b", "c")}})


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    description: str
    builder: Callable[[], tuple]
    expectation: str
    citation: str
    ablation: Callable[[], tuple] | None = None


CATALOG = {e.name: e for e in (
    CatalogEntry("thm31C", "transitive R, coarser S, operation preserving only S", _thm31c,
                 AP_FAILS, "no AP: operation preserving only the coarser relation",
                 lambda: _thm31c(preserve_s=False)),
    CatalogEntry("thm31D", "partial order, coarser tolerance, operation preserving only the tolerance",
                 _thm31d, AP_FAILS, "no AP: order with coarser tolerance and tolerance-only operation",
                 lambda: _thm31d(preserve_s=False)),
    CatalogEntry("prop35a", "antisymmetric S coarser than two partial orders", _prop35a, AP_FAILS,
                 "no AP: three relations, two orders below an antisymmetric one",
                 lambda: _prop35a(antisymmetric=False)),
    CatalogEntry("prop35b", "antisymmetric S coarser than two transitive relations", _prop35b, AP_FAILS,
                 "no AP: three relations, two transitive below an antisymmetric one",
                 lambda: _prop35b(antisymmetric=False)),
    CatalogEntry("prop35c", "partial order, coarser antisymmetric S, bijective S-preserving operation",
                 _prop35c, AP_FAILS, "no AP: bijection preserving only the coarser relation",
                 lambda: _prop35c(antisymmetric=False)),
    CatalogEntry("prop42", "preorder with a strictly preserving operation", _prop42, AP_FAILS,
                 "no AP: strict preservation on a preorder", lambda: _prop42(strict=False)),
    CatalogEntry("ex43sap", "equivalence relation with a strictly preserving operation", _ex43sap,
                 SAP_FAILS, "AP holds, SAP fails: identify a and b with equal images in C",
                 lambda: _ex43sap(strict=False)),
    CatalogEntry("rem33", "directed graphs over C = {c, d}: no acyclic amalgam", _rem33, AP_FAILS,
                 "acyclic digraphs lack AP; each side alone expands with a coarser strict order",
                 lambda: _rem33(closing_edge=False)),
    CatalogEntry("rem41", "antisymmetric relation amalgamated by the transitive recipe", _rem41,
                 MISAPPLICATION, "routing through C breaks antisymmetry without transitivity",
                 None),
)}


def names() -> list:
    return list(CATALOG)


def entry(name: str) -> CatalogEntry:
    try:
        return CATALOG[name]
    except KeyError:
        raise UnknownEntry(f"unknown catalog entry {name!r}") from None


def build(name: str) -> tuple:
    return entry(name).builder()


def ablate(name: str) -> tuple:
    """The entry's data with the offending axiom dropped, or None when not applicable."""
    e = entry(name)
    return e.ablation() if e.ablation else None


# -- verification --------------------------------------------------------------

def _expect(report: VerificationReport, label: str, actual, expected):
    ok = actual == expected
    report.entries.append(ReportEntry(f"{label}={expected}", ok, None if ok else (str(actual),)))


def forced_order_pairs(s: Structure, among) -> set:
    """Pairs x < y among ``among`` that every coarser strict order on ``s`` must contain."""
    out = search_order_expansion(s)
    among = set(among)
    return {(x, y) for x, y in out.forced if x in among and y in among}


def _verify_rem33(t: TbaTriple, budget: int, report: VerificationReport):
    joint = search_ap_amalgam(t, budget, expansion=True)
    _expect(report, "joint_expansion", joint.status, EXHAUSTED)
    for side, s in (("A", t.a), ("B", t.b)):
        out = search_order_expansion(s, budget)
        _expect(report, f"expansion_{side}", out.status, FOUND)
    forced_a = forced_order_pairs(t.a, t.c.domain)
    forced_b = forced_order_pairs(t.b, t.c.domain)
    report.entries.append(ReportEntry("forced_A:c<d", ("c", "d") in forced_a,
                                      None if ("c", "d") in forced_a else tuple(map(str, forced_a))))
    report.entries.append(ReportEntry("forced_B:d<c", ("d", "c") in forced_b,
                                      None if ("d", "c") in forced_b else tuple(map(str, forced_b))))


def verify(name: str, budget: int = DEFAULT_BUDGET, raise_on_failure: bool = True) -> VerificationReport:
    e = entry(name)
    sig, t = e.builder()
    report = VerificationReport()
    for label, s in (("A", t.a), ("B", t.b), ("C", t.c)):
        report.entries.append(ReportEntry(f"conformant_{label}", check_conformance(s).passed,
                                          None if check_conformance(s).passed else ("fail",)))
    if name == "rem33":
        _verify_rem33(t, budget, report)
    elif e.expectation == MISAPPLICATION:
        rel = sig.relation_names[0]
        pairs, _ = amalgamate_transitive(t, rel)
        d = Structure(sig, t.union_domain, {rel: pairs})
        entry_ = check_conformance(d).get(f"{rel}:{ANTISYMMETRIC}")
        report.entries.append(ReportEntry("transitive_recipe_breaks_antisymmetry", not entry_.passed,
                                          None if not entry_.passed else ("antisymmetric",)))
        union = Structure(sig, t.union_domain, {rel: amalgamate_union(t, rel)})
        union_ok = check_conformance(union).passed
        report.entries.append(ReportEntry("union_recipe_conforms", union_ok,
                                          None if union_ok else ("union",)))
        _expect(report, "sap_search", search_strong_amalgam(t, budget).status, FOUND)
    else:
        sap = search_strong_amalgam(t, budget)
        _expect(report, "sap_search", sap.status, EXHAUSTED)
        ap = search_ap_amalgam(t, budget)
        _expect(report, "ap_search", ap.status, FOUND if e.expectation == SAP_FAILS else EXHAUSTED)
        if name == "ex43sap" and ap.status == FOUND:
            d = ap_equivalence_strict(t)
            ok = check_conformance(d).passed
            report.entries.append(ReportEntry("identification_conforms", ok, None if ok else ("fail",)))
            emb_a, emb_b = ap_maps(t)
            ok = emb_a.is_embedding(t.a, d) and emb_b.is_embedding(t.b, d)
            report.entries.append(ReportEntry("identification_embeds", ok, None if ok else ("fail",)))
            iso = find_isomorphism(d, ap.amalgam) is not None
            report.entries.append(ReportEntry("identification_isomorphic_to_search", iso,
                                              None if iso else ("fail",)))
    if raise_on_failure and not report.passed:
        raise ExpectationViolated(f"{name}: expectation {e.expectation} not met", report)
    return report


def export(name: str, directory) -> Path:
    """Write A, B, C as structure files plus an expectation manifest."""
    e = entry(name)
    _, t = e.builder()
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    for label, s in (("A", t.a), ("B", t.b), ("C", t.c)):
        dump_structure(s, out / f"{name}_{label}.json")
    manifest = {"name": e.name, "description": e.description, "expectation": e.expectation,
                "citation": e.citation,
                "files": {k: f"{name}_{k}.json" for k in ("A", "B", "C")}}
    (out / f"{name}_manifest.json").write_text(dumps(manifest), encoding="utf-8")
    return out
