"""Exhaustive amalgam search on small triples.

Correctness note.  Every axiom the package knows is a universal sentence and
operations are total unary maps.  In any strong amalgam D of (A, B, C) the
set A ∪ B is closed under the operations (each is the union of A's and B's
table), so the substructure of D induced on A ∪ B is again a strong amalgam.
Searching D with domain exactly A ∪ B is therefore complete: if no such D
exists, no strong amalgam exists at all.  The free variables are the cross
pairs between A∖B and B∖A for each relation; every pair inside A² or B² is
fixed by the embedding requirement, and the tables are forced.

For plain amalgamation the two embeddings may identify some x in A∖B with
some y in B∖A.  The image of A ∪ B is again closed, so enumerating every
partial injective matching and running the strong search on the quotient is
complete as well.

Variables are ordered by (relation index, source, target) and tried false
before true, so the first model found is the least one in that order.
Every model is re-verified with :func:`check_conformance` and the embedding
check; a model that satisfies every clause with a free atom but fails
verification violates a clause over fixed atoms only, which no assignment
can repair, so the search reports ``exhausted``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

from .core import (
    ANTIREFLEXIVE,
    ANTISYMMETRIC,
    REFLEXIVE,
    SYMMETRIC,
    TRANSITIVE,
    Embedding,
    Signature,
    Structure,
    TbaTriple,
    check_conformance,
    identity_embedding,
    is_substructure,
    validate_tba,
)
from .errors import Inconsistent, NotConformant, UnsupportedSignature
from .solver import BUDGET, EXHAUSTED, FOUND, build_problem

DEFAULT_BUDGET = 10 ** 7
MAX_MATCHING = 4


@dataclass
class SearchOutcome:
    status: str
    amalgam: Structure | None = None
    embedding_a: Embedding | None = None
    embedding_b: Embedding | None = None
    nodes_explored: int = 0
    forced: frozenset = field(default_factory=frozenset)

    @property
    def found(self) -> bool:
        return self.status == FOUND

    def to_dict(self) -> dict:
        from .fileformat import structure_to_dict

        out = {"status": self.status, "nodes_explored": self.nodes_explored, "amalgam": None}
        if self.amalgam is not None:
            out["amalgam"] = structure_to_dict(self.amalgam)
            out["embedding_a"] = dict(sorted(self.embedding_a.mapping.items()))
            out["embedding_b"] = dict(sorted(self.embedding_b.mapping.items()))
        return out


def union_tables(t: TbaTriple) -> dict:
    tables = {}
    for name in t.signature.operation_names:
        ta, tb = t.a.table(name), t.b.table(name)
        for x in t.c.domain:
            if ta[x] != tb[x]:
                raise Inconsistent(f"{name} disagrees on {x}")
        merged = dict(ta)
        merged.update(tb)
        tables[name] = merged
    return tables


def cross_atoms(t: TbaTriple) -> list:
    """Free atoms in search order: (relation index, source token, target token)."""
    atoms = []
    only_a, only_b = t.only_a, t.only_b
    for rel in t.signature.relation_names:
        pairs = [(x, y) for x in only_a for y in only_b] + [(y, x) for x in only_a for y in only_b]
        atoms.extend((rel, x, y) for x, y in sorted(pairs))
    return atoms


def strong_problem(t: TbaTriple):
    fixed = {}
    for s in (t.a, t.b):
        for rel, pairs in s.extents.items():
            for x, y in pairs:
                fixed[(rel, x, y)] = True
    tables = union_tables(t)
    free = cross_atoms(t)
    return build_problem(t.signature, t.union_domain, fixed, free, tables), tables


def _structure_from_model(t: TbaTriple, tables: dict, model: dict) -> Structure:
    extents = {rel: set(t.a.extent(rel) | t.b.extent(rel)) for rel in t.signature.relation_names}
    for (rel, x, y), val in model.items():
        if val:
            extents[rel].add((x, y))
    return Structure(t.signature, t.union_domain, extents, tables)


def admissible(t: TbaTriple, d: Structure) -> bool:
    """Is ``d`` an admissible point of the strong search space that satisfies every axiom?"""
    if d.signature != t.signature or d.domain != t.union_domain:
        return False
    if not (is_substructure(t.a, d) and is_substructure(t.b, d)):
        return False
    try:
        tables = union_tables(t)
    except Inconsistent:
        return False
    if any(dict(d.table(n)) != tables[n] for n in tables):
        return False
    return check_conformance(d).passed


def search_strong_amalgam(t: TbaTriple, budget: int = DEFAULT_BUDGET) -> SearchOutcome:
    try:
        problem, tables = strong_problem(t)
    except Inconsistent:
        return SearchOutcome(EXHAUSTED)
    result = problem.solve(budget=budget)
    if result.status != FOUND:
        return SearchOutcome(result.status, nodes_explored=result.nodes)
    d = _structure_from_model(t, tables, result.assignment)
    if not admissible(t, d):
        return SearchOutcome(EXHAUSTED, nodes_explored=result.nodes)
    emb_a, emb_b = identity_embedding(t.a), identity_embedding(t.b)
    return SearchOutcome(FOUND, d, emb_a, emb_b, result.nodes)


def _rename(s: Structure, m: dict) -> Structure:
    extents = {n: [(m[x], m[y]) for x, y in pairs] for n, pairs in s.extents.items()}
    tables = {n: {m[x]: m[fx] for x, fx in tab.items()} for n, tab in s.tables.items()}
    return Structure(s.signature, [m[x] for x in s.domain], extents, tables)


def matchings(left: list, right: list, cap: int = MAX_MATCHING):
    """Partial injective matchings, smallest first, each as a sorted tuple of pairs."""
    limit = min(len(left), len(right), cap)
    for k in range(limit + 1):
        for lefts in itertools.combinations(left, k):
            for rights in itertools.permutations(right, k):
                yield tuple(zip(lefts, rights))


def quotient_triple(t: TbaTriple, matching) -> tuple | None:
    """Identify each matched y ∈ B∖A with its x ∈ A∖B; None if B does not embed that way."""
    m = {y: y for y in t.b.domain}
    for x, y in matching:
        m[y] = x
    b2 = _rename(t.b, m)
    common = t.a.domain & b2.domain
    a_part = {rel: {(x, y) for x, y in pairs if x in common and y in common}
              for rel, pairs in t.a.extents.items()}
    b_part = {rel: {(x, y) for x, y in pairs if x in common and y in common}
              for rel, pairs in b2.extents.items()}
    if a_part != b_part:
        return None
    for name in t.signature.operation_names:
        ta, tb = t.a.table(name), b2.table(name)
        if any(ta[x] != tb[x] for x in common):
            return None
    c2 = Structure(t.signature, common, a_part,
                   {n: {x: t.a.table(n)[x] for x in common} for n in t.signature.operation_names})
    try:
        return validate_tba(t.a, b2, c2), Embedding(m)
    except NotConformant:
        return None


def search_ap_amalgam(t: TbaTriple, budget: int = DEFAULT_BUDGET,
                      max_matching: int = MAX_MATCHING, expansion: bool = False) -> SearchOutcome:
    """Strong search over every admissible identification, smallest matching first.

    With ``expansion`` the per-quotient search is :func:`search_order_expansion`
    (amalgams whose single relation sits inside a strict order), and the
    returned structure carries the extra order relation.
    """
    nodes = 0
    for matching in matchings(sorted(t.only_a), sorted(t.only_b), max_matching):
        q = quotient_triple(t, matching)
        if q is None:
            continue
        t2, emb_b = q
        if expansion:
            out = search_order_expansion(t2, budget - nodes)
        else:
            out = search_strong_amalgam(t2, budget - nodes)
        nodes += out.nodes_explored
        if out.status == FOUND:
            if not expansion and not (identity_embedding(t.a).is_embedding(t.a, out.amalgam)
                                      and emb_b.is_embedding(t.b, out.amalgam)):
                continue
            return SearchOutcome(FOUND, out.amalgam, identity_embedding(t.a), emb_b, nodes)
        if out.status == BUDGET or nodes >= budget:
            return SearchOutcome(BUDGET, nodes_explored=nodes)
    return SearchOutcome(EXHAUSTED, nodes_explored=nodes)


STRICT_ORDER = frozenset({TRANSITIVE, ANTIREFLEXIVE, ANTISYMMETRIC})


def expansion_signature(sig: Signature, order_name: str = "lt") -> Signature:
    """``sig`` (one relation) plus a strict order coarser than that relation."""
    if len(sig.relations) != 1 or sig.operations:
        raise UnsupportedSignature("order expansion needs one relation and no operations")
    (rel, props), = sig.relations
    if order_name == rel:
        order_name += "_"
    return Signature(((rel, props), (order_name, STRICT_ORDER)), {(rel, order_name)})


def search_order_expansion(x, budget: int = DEFAULT_BUDGET) -> SearchOutcome:
    """Find a strict order coarser than the relation of a structure or of a triple's amalgam.

    For a structure only the order is free.  For a triple the amalgam's
    cross pairs are free as well, so ``exhausted`` means no strong amalgam
    of the triple expands.  ``forced`` lists the order pairs that unit
    propagation derives, i.e. those present in every expansion.
    """
    if isinstance(x, TbaTriple):
        sig, domain, parts = x.signature, x.union_domain, (x.a, x.b)
        free_rel = cross_atoms(x)
    else:
        sig, domain, parts = x.signature, x.domain, (x,)
        free_rel = []
    esig = expansion_signature(sig)
    rel, order = esig.relation_names
    fixed = {(rel, p, q): True for s in parts for p, q in s.extent(rel)}
    order_atoms = [(order, p, q) for p in sorted(domain) for q in sorted(domain)]
    problem = build_problem(esig, domain, fixed, free_rel + order_atoms, {})
    forced = problem.forced() or {}
    forced_pairs = frozenset((p, q) for (r, p, q), v in forced.items() if r == order and v)
    result = problem.solve(budget=budget)
    if result.status != FOUND:
        return SearchOutcome(result.status, nodes_explored=result.nodes, forced=forced_pairs)
    extents = {rel: {(p, q) for s in parts for p, q in s.extent(rel)}, order: set()}
    for (r, p, q), v in result.assignment.items():
        if v:
            extents[r].add((p, q))
    d = Structure(esig, domain, extents)
    if not check_conformance(d).passed:
        return SearchOutcome(EXHAUSTED, nodes_explored=result.nodes, forced=forced_pairs)
    ident = Embedding({p: p for p in domain})
    return SearchOutcome(FOUND, d, ident, ident, result.nodes, forced_pairs)


EQUIVALENCE = frozenset({TRANSITIVE, REFLEXIVE, SYMMETRIC})


def ap_equivalence_strict(t: TbaTriple) -> Structure:
    """Amalgamate an equivalence relation with one strict-preserving operation.

    x ∈ A∖B is identified with y ∈ B∖A when they are linked through C
    (x R c R y) and some iterate fⁿ(x) = fⁿ(y) lands in C.
    """
    sig = t.signature
    if len(sig.relations) != 1 or sig.relations[0][1] != EQUIVALENCE:
        raise UnsupportedSignature("needs exactly one equivalence relation")
    if len(sig.operations) != 1:
        raise UnsupportedSignature("needs exactly one operation")
    op = sig.operations[0]
    rel = sig.relations[0][0]
    if not op.strict or op.preserves != {rel} or op.reverses:
        raise UnsupportedSignature("the operation must strictly preserve the relation")

    ident = equivalence_identifications(t)
    fa = t.a.table(op.name)
    ra = t.a.extent(rel)
    m = {y: ident.get(y, y) for y in t.b.domain}
    b2 = _rename(t.b, m)
    domain = t.a.domain | b2.domain
    pairs = set(ra | b2.extent(rel))
    # transitive closure by iterated squaring
    while True:
        succ = {}
        for x, y in pairs:
            succ.setdefault(x, set()).add(y)
        new = {(x, z) for x, y in pairs for z in succ.get(y, ())}
        if new <= pairs:
            break
        pairs |= new
    table = dict(fa)
    for y, fy in b2.table(op.name).items():
        if y in table and table[y] != fy:
            raise Inconsistent(f"{op.name} is not well defined on {y}")
        table[y] = fy
    return Structure(sig, domain, {rel: pairs}, {op.name: table})


def equivalence_identifications(t: TbaTriple) -> dict:
    """Map y ∈ B∖A to the x ∈ A∖B it is identified with."""
    op = t.signature.operations[0]
    rel = t.signature.relations[0][0]
    fa, fb = t.a.table(op.name), t.b.table(op.name)
    ra, rb = t.a.extent(rel), t.b.extent(rel)
    common = t.c.domain
    # the pair of iterates is eventually periodic within |A|·|B| steps
    horizon = len(t.a) * len(t.b) + 1
    ident = {}
    for y in sorted(t.only_b):
        for x in sorted(t.only_a):
            if not any((x, c) in ra and (c, y) in rb for c in common):
                continue
            xs, ys = x, y
            for _ in range(horizon):
                xs, ys = fa[xs], fb[ys]
                if xs == ys and xs in common:
                    break
            else:
                continue
            if y in ident or x in ident.values():
                raise Inconsistent(f"{x} and {y}: identification is not injective")
            ident[y] = x
    return ident


def ap_maps(t: TbaTriple) -> tuple:
    """The quotient maps of A and B into the :func:`ap_equivalence_strict` result."""
    ident = equivalence_identifications(t)
    return identity_embedding(t.a), Embedding({y: ident.get(y, y) for y in t.b.domain})
