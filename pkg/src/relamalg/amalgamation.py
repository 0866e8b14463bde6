"""Constructive strong amalgamation over D = A ∪ B.

Two relation constructors do the work.  :func:`amalgamate_union` keeps only
the pairs already present in A or B.  :func:`amalgamate_transitive` also adds
every pair routed through the common part, ``x R_A c R_B y`` or
``x R_B c R_A y``.  The dispatchers :func:`amalgamate_single` and
:func:`amalgamate_pair` choose between them by whether the relation is
required to be transitive, and refuse operation specs for which no amalgam
exists in general.  The raw constructors perform no such policing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Callable, Mapping

from .core import (
    ANTIREFLEXIVE,
    ANTISYMMETRIC,
    REFLEXIVE,
    SYMMETRIC,
    TRANSITIVE,
    ReportEntry,
    Signature,
    Structure,
    TbaTriple,
    VerificationReport,
    _same_signature,
    empty_structure,
    validate_tba,
)
from .errors import Inconsistent, UnknownRelation, UnsupportedSignature

__all__ = [
    "Amalgam",
    "TbaTriple",
    "amalgamate",
    "amalgamate_pair",
    "amalgamate_single",
    "amalgamate_transitive",
    "amalgamate_union",
    "extend_operations",
    "joint_embedding",
    "strict_of",
    "superamalgamation_witnesses",
]

STRICT_ORDER = frozenset({TRANSITIVE, ANTIREFLEXIVE, ANTISYMMETRIC})
ORDER = frozenset({TRANSITIVE, REFLEXIVE, ANTISYMMETRIC})


@dataclass(frozen=True)
class Amalgam:
    """Result structure plus, per relation, the witness of each cross pair."""

    d: Structure
    witnesses: Mapping = field(default_factory=dict)

    def __post_init__(self):
        frozen = {rel: MappingProxyType(dict(w)) for rel, w in self.witnesses.items()}
        object.__setattr__(self, "witnesses", MappingProxyType(frozen))

    def witness_triples(self, rel: str) -> list:
        return sorted((x, y, c) for (x, y), c in self.witnesses.get(rel, {}).items())


def _require_relation(t: TbaTriple, rel: str):
    if rel not in t.signature.relation_names:
        raise UnknownRelation(rel)


def amalgamate_union(t: TbaTriple, rel: str) -> frozenset:
    _require_relation(t, rel)
    return t.a.extent(rel) | t.b.extent(rel)


def _compose(first: frozenset, second: frozenset) -> dict:
    """Map (x, y) -> least middle c with x first c and c second y."""
    succ = {}
    for c, y in second:
        succ.setdefault(c, []).append(y)
    out = {}
    for x, c in first:
        for y in succ.get(c, ()):
            prev = out.get((x, y))
            if prev is None or c < prev:
                out[(x, y)] = c
    return out


def amalgamate_transitive(t: TbaTriple, rel: str) -> tuple:
    """R_A ∪ R_B ∪ (R_A ∘ R_B) ∪ (R_B ∘ R_A) and witnesses for its cross pairs.

    Composition is diagrammatic: ``x (R_A ∘ R_B) y`` iff ``x R_A c R_B y`` for
    some c, necessarily in C.  Witnesses are the least such c.
    """
    _require_relation(t, rel)
    ra, rb = t.a.extent(rel), t.b.extent(rel)
    only_a, only_b = t.only_a, t.only_b
    pairs = set(ra | rb)
    witnesses = {}
    for composed in (_compose(ra, rb), _compose(rb, ra)):
        for (x, y), c in composed.items():
            pairs.add((x, y))
            if (x in only_a and y in only_b) or (x in only_b and y in only_a):
                prev = witnesses.get((x, y))
                if prev is None or c < prev:
                    witnesses[(x, y)] = c
    return frozenset(pairs), witnesses


def extend_operations(t: TbaTriple, extents: Mapping) -> Structure:
    """The structure on A ∪ B with the given extents and the union of A's and B's tables."""
    tables = {}
    for name in t.signature.operation_names:
        ta, tb = t.a.table(name), t.b.table(name)
        for x in t.c.domain:
            if ta[x] != tb[x]:
                raise Inconsistent(f"{name} disagrees on {x}: {ta[x]} vs {tb[x]}")
        merged = dict(ta)
        merged.update(tb)
        tables[name] = merged
    return Structure(t.signature, t.union_domain, extents, tables)


def superamalgamation_witnesses(d: Structure, t: TbaTriple, rel: str) -> tuple:
    """Find, for every cross pair of ``rel`` in ``d``, a middle element of C.

    A pair (x, y) with x in A∖B and y in B∖A needs c in C with x R_A c R_B y;
    the converse orientation needs x R_B c R_A y.  Returns the report and
    the map of least witnesses; unwitnessed pairs fail the report.
    """
    _require_relation(t, rel)
    ra, rb = t.a.extent(rel), t.b.extent(rel)
    only_a, only_b = t.only_a, t.only_b
    common = sorted(t.c.domain)
    report = VerificationReport()
    witnesses = {}
    for x, y in sorted(d.extent(rel)):
        if x in only_a and y in only_b:
            first, second = ra, rb
        elif x in only_b and y in only_a:
            first, second = rb, ra
        else:
            continue
        found = next((c for c in common if (x, c) in first and (c, y) in second), None)
        if found is None:
            report.entries.append(ReportEntry(f"{rel}:witness", False, (x, y)))
        else:
            witnesses[(x, y)] = found
    if not report.entries:
        report.entries.append(ReportEntry(f"{rel}:witness", True, None))
    return report, witnesses


def _check_strict_ops(sig: Signature, rel: str, props: frozenset):
    for op in sig.operations:
        if not op.strict or op.bijective:
            continue
        if TRANSITIVE in props and ANTISYMMETRIC in props:
            continue
        raise UnsupportedSignature(
            f"operation {op.name!r} strictly preserves/reverses {rel!r}, which is not "
            "transitive and antisymmetric; strict operations on preorders have no "
            "amalgamation in general (counterexample 'prop42')")


def _finish(t: TbaTriple, extents: dict) -> Amalgam:
    d = extend_operations(t, extents)
    witnesses = {}
    for rel in t.signature.relation_names:
        _, w = superamalgamation_witnesses(d, t, rel)
        witnesses[rel] = w
    return Amalgam(d, witnesses)


def amalgamate_single(t: TbaTriple) -> Amalgam:
    sig = t.signature
    if len(sig.relations) != 1:
        raise UnsupportedSignature("amalgamate_single needs exactly one relation symbol")
    rel, props = sig.relations[0]
    _check_strict_ops(sig, rel, props)
    if TRANSITIVE in props:
        pairs, _ = amalgamate_transitive(t, rel)
    else:
        pairs = amalgamate_union(t, rel)
    return _finish(t, {rel: pairs})


def _finer_coarser(sig: Signature) -> tuple:
    if len(sig.relations) != 2:
        raise UnsupportedSignature(
            "amalgamate_pair needs exactly two relation symbols; three or more comparable "
            "relations have no amalgamation in general (counterexamples 'prop35a', 'prop35b')")
    if len(sig.coarser_than) != 1:
        raise UnsupportedSignature("amalgamate_pair needs exactly one coarseness pair")
    (finer, coarser), = sig.coarser_than
    return finer, coarser


def _check_pair_ops(sig: Signature, finer: str, coarser: str):
    for op in sig.operations:
        if coarser in op.preserves and finer not in op.preserves:
            raise UnsupportedSignature(
                f"operation {op.name!r} preserves the coarser relation {coarser!r} but not "
                f"{finer!r}; no amalgamation exists in general (counterexamples 'thm31C', 'thm31D')")
        if coarser in op.reverses and finer not in op.reverses:
            raise UnsupportedSignature(
                f"operation {op.name!r} reverses the coarser relation {coarser!r} but not "
                f"{finer!r}; no amalgamation exists in general")
        if op.strict and not op.bijective:
            raise UnsupportedSignature(
                f"strict operation {op.name!r} is only supported on a single relation")


def amalgamate_pair(t: TbaTriple) -> Amalgam:
    sig = t.signature
    finer, coarser = _finer_coarser(sig)
    _check_pair_ops(sig, finer, coarser)
    p, q = sig.properties(finer), sig.properties(coarser)
    if TRANSITIVE not in p:
        # union for R is finer than either construction for S
        r = amalgamate_union(t, finer)
        if TRANSITIVE in q:
            s, _ = amalgamate_transitive(t, coarser)
        else:
            s = amalgamate_union(t, coarser)
    elif TRANSITIVE in q:
        r, _ = amalgamate_transitive(t, finer)
        s, _ = amalgamate_transitive(t, coarser)
    else:
        r, _ = amalgamate_transitive(t, finer)
        s = set(t.a.extent(coarser) | t.b.extent(coarser))
        s |= r
        if SYMMETRIC in q:
            s |= {(y, x) for x, y in r}
        s = frozenset(s)
    return _finish(t, {finer: r, coarser: s})


def amalgamate(t: TbaTriple) -> Amalgam:
    """Dispatch on the number of relation symbols."""
    n = len(t.signature.relations)
    if n == 0:
        return _finish(t, {})
    if n == 1:
        return amalgamate_single(t)
    if n == 2:
        return amalgamate_pair(t)
    raise UnsupportedSignature(
        f"{n} relation symbols: no amalgamation procedure beyond two comparable relations")


def strict_of(s: Structure, rel: str) -> Structure:
    """Drop the diagonal of ``rel``; re-annotate orders as strict orders."""
    props = s.signature.properties(rel)
    new_props = STRICT_ORDER if props == ORDER else frozenset()
    sig = s.signature.with_properties(rel, new_props)
    extents = dict(s.extents)
    extents[rel] = [(x, y) for x, y in s.extent(rel) if x != y]
    return Structure(sig, s.domain, extents, s.tables)


def _rename(s: Structure, rename: Callable[[str], str]) -> Structure:
    m = {x: rename(x) for x in s.domain}
    extents = {n: [(m[x], m[y]) for x, y in pairs] for n, pairs in s.extents.items()}
    tables = {n: {m[x]: m[fx] for x, fx in tab.items()} for n, tab in s.tables.items()}
    return Structure(s.signature, m.values(), extents, tables)


def joint_embedding(a: Structure, b: Structure, rename: Callable[[str], str] | str = "'") -> Amalgam:
    """Amalgamate over the empty structure.

    Overlapping tokens of ``b`` are renamed first: ``rename`` is a suffix
    string or a callable; it is applied repeatedly until the domains are
    disjoint.
    """
    _same_signature(a, b)
    if a.domain & b.domain:
        step = (lambda x: x + rename) if isinstance(rename, str) else rename
        while a.domain & b.domain:
            b = _rename(b, step)
    t = validate_tba(a, b, empty_structure(a.signature))
    return amalgamate(t)
