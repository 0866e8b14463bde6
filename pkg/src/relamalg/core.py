"""Finite structures with binary relations and unary operations.

A :class:`Structure` interprets every symbol of its :class:`Signature`: each
relation as an explicit set of ordered pairs and each operation as a total
table.  Nothing is ever added implicitly (no reflexive closure, no symmetric
closure); whether a structure satisfies the axioms attached to its signature
is answered by :func:`check_conformance`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import MappingProxyType
from typing import Iterable, Mapping

from .errors import (
    DomainMismatch,
    NotClosed,
    NotConformant,
    NotSubstructure,
    SignatureMismatch,
    StructureError,
    UnknownRelation,
)

TRANSITIVE = "transitive"
REFLEXIVE = "reflexive"
SYMMETRIC = "symmetric"
ANTIREFLEXIVE = "antireflexive"
ANTISYMMETRIC = "antisymmetric"

PROPERTIES = (TRANSITIVE, REFLEXIVE, SYMMETRIC, ANTIREFLEXIVE, ANTISYMMETRIC)

Pair = tuple[str, str]


def _check_token(token) -> str:
    if not isinstance(token, str) or not token or any(ch.isspace() for ch in token):
        raise StructureError(f"invalid element token {token!r}")
    return token


@dataclass(frozen=True)
class OperationSpec:
    """A unary operation symbol and the relations it preserves or reverses.

    ``strict`` additionally demands that distinct related inputs have
    distinct images; ``bijective`` demands the table be a permutation.
    """

    name: str
    preserves: frozenset = frozenset()
    reverses: frozenset = frozenset()
    strict: bool = False
    bijective: bool = False

    def __post_init__(self):
        object.__setattr__(self, "preserves", frozenset(self.preserves))
        object.__setattr__(self, "reverses", frozenset(self.reverses))

    @property
    def touched(self) -> frozenset:
        return self.preserves | self.reverses


@dataclass(frozen=True)
class Signature:
    relations: tuple = ()
    coarser_than: frozenset = frozenset()
    operations: tuple = ()

    def __post_init__(self):
        rels = []
        for name, props in self.relations:
            props = frozenset(props)
            unknown = props - set(PROPERTIES)
            if unknown:
                raise StructureError(f"unknown properties {sorted(unknown)} for {name!r}")
            rels.append((_check_token(name), props))
        object.__setattr__(self, "relations", tuple(rels))
        object.__setattr__(self, "coarser_than", frozenset(tuple(p) for p in self.coarser_than))
        object.__setattr__(self, "operations", tuple(self.operations))

        names = [name for name, _ in self.relations]
        if len(set(names)) != len(names):
            raise StructureError("relation symbols must be pairwise distinct")
        ops = [op.name for op in self.operations]
        if len(set(ops)) != len(ops):
            raise StructureError("operation symbols must be pairwise distinct")
        for finer, coarser in self.coarser_than:
            if finer not in names or coarser not in names:
                raise StructureError(f"coarseness pair ({finer}, {coarser}) names an unknown relation")
            if finer == coarser:
                raise StructureError(f"coarseness pair ({finer}, {coarser}) is trivial")
        for op in self.operations:
            _check_token(op.name)
            missing = op.touched - set(names)
            if missing:
                raise StructureError(f"operation {op.name!r} references unknown relations {sorted(missing)}")

    @property
    def relation_names(self) -> tuple:
        return tuple(name for name, _ in self.relations)

    @property
    def operation_names(self) -> tuple:
        return tuple(op.name for op in self.operations)

    def properties(self, rel: str) -> frozenset:
        for name, props in self.relations:
            if name == rel:
                return props
        raise UnknownRelation(rel)

    def operation(self, name: str) -> OperationSpec:
        for op in self.operations:
            if op.name == name:
                return op
        raise KeyError(name)

    def with_properties(self, rel: str, props) -> "Signature":
        self.properties(rel)
        relations = tuple((n, frozenset(props) if n == rel else p) for n, p in self.relations)
        return Signature(relations, self.coarser_than, self.operations)

    @classmethod
    def single(cls, properties=(), operations=(), name="R") -> "Signature":
        return cls(((name, frozenset(properties)),), frozenset(), tuple(operations))


class Structure:
    """Immutable finite structure over a signature."""

    __slots__ = ("signature", "domain", "extents", "tables", "_order", "_hash")

    def __init__(self, signature: Signature, domain: Iterable[str],
                 extents: Mapping[str, Iterable[Pair]] | None = None,
                 tables: Mapping[str, Mapping[str, str]] | None = None):
        domain = frozenset(_check_token(x) for x in domain)
        extents = dict(extents or {})
        tables = dict(tables or {})

        unknown = set(extents) - set(signature.relation_names)
        if unknown:
            raise StructureError(f"extents for unknown relations {sorted(unknown)}")
        unknown = set(tables) - set(signature.operation_names)
        if unknown:
            raise StructureError(f"tables for unknown operations {sorted(unknown)}")

        ext = {}
        for name in signature.relation_names:
            pairs = frozenset((x, y) for x, y in extents.get(name, ()))
            for x, y in pairs:
                if x not in domain or y not in domain:
                    raise StructureError(f"pair ({x}, {y}) of {name!r} lies outside the domain")
            ext[name] = pairs
        tabs = {}
        for name in signature.operation_names:
            table = dict(tables.get(name, {}))
            if set(table) != domain:
                raise StructureError(f"table of {name!r} is not total on the domain")
            for x, fx in table.items():
                if fx not in domain:
                    raise StructureError(f"{name}({x}) = {fx} lies outside the domain")
            tabs[name] = MappingProxyType(table)

        object.__setattr__(self, "signature", signature)
        object.__setattr__(self, "domain", domain)
        object.__setattr__(self, "extents", MappingProxyType(ext))
        object.__setattr__(self, "tables", MappingProxyType(tabs))
        object.__setattr__(self, "_order", tuple(sorted(domain)))
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, key, value):
        raise AttributeError("Structure is immutable")

    @property
    def order(self) -> tuple:
        """Domain in canonical (sorted) order."""
        return self._order

    def extent(self, rel: str) -> frozenset:
        try:
            return self.extents[rel]
        except KeyError:
            raise UnknownRelation(rel) from None

    def table(self, op: str) -> Mapping[str, str]:
        return self.tables[op]

    def replace(self, *, signature=None, domain=None, extents=None, tables=None) -> "Structure":
        return Structure(
            signature if signature is not None else self.signature,
            domain if domain is not None else self.domain,
            extents if extents is not None else self.extents,
            tables if tables is not None else self.tables,
        )

    def __len__(self):
        return len(self.domain)

    def _key(self):
        return (
            self.signature,
            self.domain,
            tuple(sorted(self.extents.items())),
            tuple((k, tuple(sorted(v.items()))) for k, v in sorted(self.tables.items())),
        )

    def __eq__(self, other):
        if not isinstance(other, Structure):
            return NotImplemented
        return self._key() == other._key()

    def __hash__(self):
        if self._hash is None:
            object.__setattr__(self, "_hash", hash(self._key()))
        return self._hash

    def __repr__(self):
        rels = ", ".join(f"{k}={sorted(v)}" for k, v in self.extents.items())
        return f"Structure(domain={list(self.order)}, {rels})"


def empty_structure(signature: Signature) -> Structure:
    return Structure(signature, ())


@dataclass(frozen=True)
class ReportEntry:
    axiom: str
    passed: bool
    witness: tuple | None = None


@dataclass
class VerificationReport:
    entries: list = field(default_factory=list)

    def add(self, axiom: str, witness: tuple | None = None):
        """Record ``axiom``; a witness means it failed."""
        self.entries.append(ReportEntry(axiom, witness is None, witness))

    @property
    def passed(self) -> bool:
        return all(e.passed for e in self.entries)

    def failures(self) -> list:
        return [e for e in self.entries if not e.passed]

    def vector(self) -> tuple:
        return tuple((e.axiom, e.passed) for e in self.entries)

    def get(self, axiom: str) -> ReportEntry:
        for e in self.entries:
            if e.axiom == axiom:
                return e
        raise KeyError(axiom)

    def extend(self, other: "VerificationReport", prefix: str = ""):
        for e in other.entries:
            self.entries.append(ReportEntry(prefix + e.axiom, e.passed, e.witness))

    def to_text(self) -> str:
        lines = []
        for e in self.entries:
            if e.passed:
                lines.append(f"PASS\t{e.axiom}")
            else:
                lines.append(f"FAIL\t{e.axiom}\t{' '.join(e.witness)}")
        return "\n".join(lines) + ("\n" if lines else "")


def _successors(order, pairs) -> dict:
    succ = {x: set() for x in order}
    for x, y in pairs:
        succ[x].add(y)
    return succ


def _property_witness(prop: str, order: tuple, pairs: frozenset):
    """Lexicographically least violation of ``prop``, or None."""
    if prop == TRANSITIVE:
        succ = _successors(order, pairs)
        for x in order:
            sx = succ[x]
            for y in sorted(sx):
                missing = succ[y] - sx
                if missing:
                    return (x, y, min(missing))
    elif prop == REFLEXIVE:
        for x in order:
            if (x, x) not in pairs:
                return (x,)
    elif prop == ANTIREFLEXIVE:
        loops = sorted(x for x, y in pairs if x == y)
        if loops:
            return (loops[0],)
    elif prop == SYMMETRIC:
        bad = [p for p in pairs if (p[1], p[0]) not in pairs]
        if bad:
            return min(bad)
    elif prop == ANTISYMMETRIC:
        bad = [p for p in pairs if p[0] != p[1] and (p[1], p[0]) in pairs]
        if bad:
            return min(bad)
    return None


def relation_report(prop: str, order, pairs, name: str = "R") -> ReportEntry:
    w = _property_witness(prop, tuple(order), frozenset(pairs))
    return ReportEntry(f"{name}:{prop}", w is None, w)


def check_conformance(s: Structure) -> VerificationReport:
    """Check every axiom attached to the signature of ``s``.

    Never raises; a failed entry carries the lexicographically least
    counterexample tuple.
    """
    sig = s.signature
    order = s.order
    report = VerificationReport()
    for name, props in sig.relations:
        pairs = s.extents[name]
        for prop in PROPERTIES:
            if prop in props:
                report.add(f"{name}:{prop}", _property_witness(prop, order, pairs))
    for finer, coarser in sorted(sig.coarser_than):
        bad = s.extents[finer] - s.extents[coarser]
        report.add(f"coarse({finer},{coarser})", min(bad) if bad else None)
    for op in sig.operations:
        f = s.tables[op.name]
        for rel in sorted(op.preserves):
            pairs = s.extents[rel]
            bad = [p for p in pairs if (f[p[0]], f[p[1]]) not in pairs]
            report.add(f"{op.name}:preserves({rel})", min(bad) if bad else None)
        for rel in sorted(op.reverses):
            pairs = s.extents[rel]
            bad = [p for p in pairs if (f[p[1]], f[p[0]]) not in pairs]
            report.add(f"{op.name}:reverses({rel})", min(bad) if bad else None)
        if op.strict:
            for rel in sorted(op.touched):
                bad = [p for p in s.extents[rel] if p[0] != p[1] and f[p[0]] == f[p[1]]]
                report.add(f"{op.name}:strict({rel})", min(bad) if bad else None)
        if op.bijective:
            seen = {}
            witness = None
            for x in order:
                if f[x] in seen:
                    witness = (seen[f[x]], x)
                    break
                seen[f[x]] = x
            report.add(f"{op.name}:bijective", witness)
    return report


def is_conformant(s: Structure) -> bool:
    return check_conformance(s).passed


def _same_signature(*structures: Structure):
    sig = structures[0].signature
    for s in structures[1:]:
        if s.signature != sig:
            raise SignatureMismatch("structures have different signatures")


def induced_substructure(s: Structure, subset: Iterable[str]) -> Structure:
    subset = frozenset(subset)
    if not subset <= s.domain:
        raise StructureError(f"{sorted(subset - s.domain)} not in the domain")
    tables = {}
    for name, table in s.tables.items():
        restricted = {}
        for x in subset:
            if table[x] not in subset:
                raise NotClosed(f"{name}({x}) = {table[x]} leaves the subset")
            restricted[x] = table[x]
        tables[name] = restricted
    extents = {name: [(x, y) for x, y in pairs if x in subset and y in subset]
               for name, pairs in s.extents.items()}
    return Structure(s.signature, subset, extents, tables)


def is_substructure(c: Structure, a: Structure) -> bool:
    """True iff ``c`` is exactly the substructure of ``a`` induced on ``c.domain``."""
    _same_signature(c, a)
    dom = c.domain
    if not dom <= a.domain:
        return False
    for name, pairs in a.extents.items():
        if c.extents[name] != {(x, y) for x, y in pairs if x in dom and y in dom}:
            return False
    for name, table in a.tables.items():
        ctab = c.tables[name]
        if any(table[x] != ctab[x] for x in dom):
            return False
    return True


@dataclass(frozen=True)
class Embedding:
    """Injective map between domains; see :meth:`is_embedding` for the full check."""

    mapping: Mapping[str, str]

    def __post_init__(self):
        object.__setattr__(self, "mapping", MappingProxyType(dict(self.mapping)))

    def __call__(self, x: str) -> str:
        return self.mapping[x]

    def __hash__(self):
        return hash(tuple(sorted(self.mapping.items())))

    def __eq__(self, other):
        return isinstance(other, Embedding) and dict(self.mapping) == dict(other.mapping)

    def is_embedding(self, src: Structure, dst: Structure) -> bool:
        m = self.mapping
        if set(m) != src.domain or not set(m.values()) <= dst.domain:
            return False
        if len(set(m.values())) != len(m):
            return False
        image = set(m.values())
        for name, pairs in src.extents.items():
            mapped = {(m[x], m[y]) for x, y in pairs}
            target = {(x, y) for x, y in dst.extents[name] if x in image and y in image}
            if mapped != target:
                return False
        for name, table in src.tables.items():
            dtab = dst.tables[name]
            if any(m[table[x]] != dtab[m[x]] for x in src.domain):
                return False
        return True


def identity_embedding(s: Structure) -> Embedding:
    return Embedding({x: x for x in s.domain})


def _invariants(s: Structure) -> dict:
    inv = {x: [] for x in s.domain}
    for name in s.signature.relation_names:
        pairs = s.extents[name]
        out = dict.fromkeys(s.domain, 0)
        inc = dict.fromkeys(s.domain, 0)
        for x, y in pairs:
            out[x] += 1
            inc[y] += 1
        for x in s.domain:
            inv[x].extend(((x, x) in pairs, out[x], inc[x]))
    for name in s.signature.operation_names:
        table = s.tables[name]
        pre = dict.fromkeys(s.domain, 0)
        for x in s.domain:
            pre[table[x]] += 1
        for x in s.domain:
            inv[x].extend((table[x] == x, pre[x]))
    return {x: tuple(v) for x, v in inv.items()}


def find_isomorphism(a: Structure, b: Structure) -> Embedding | None:
    """Backtracking isomorphism search with invariant (degree-sequence) pruning."""
    _same_signature(a, b)
    if len(a) != len(b):
        return None
    for name in a.signature.relation_names:
        if len(a.extents[name]) != len(b.extents[name]):
            return None
    inv_a = _invariants(a)
    inv_b = _invariants(b)
    if sorted(inv_a.values()) != sorted(inv_b.values()):
        return None

    by_inv = {}
    for y in b.order:
        by_inv.setdefault(inv_b[y], []).append(y)
    # most constrained first: rare invariants, then high degree
    order = sorted(a.order, key=lambda x: (len(by_inv[inv_a[x]]), tuple(-v for v in inv_a[x]), x))
    rels = [(a.extents[n], b.extents[n]) for n in a.signature.relation_names]
    ops = [(a.tables[n], b.tables[n]) for n in a.signature.operation_names]
    pre_a = [{} for _ in ops]
    for i, (ta, _) in enumerate(ops):
        for x, fx in ta.items():
            pre_a[i].setdefault(fx, []).append(x)

    m: dict = {}
    used: set = set()

    def consistent(x, y):
        for ra, rb in rels:
            if ((x, x) in ra) != ((y, y) in rb):
                return False
            for x2, y2 in m.items():
                if ((x, x2) in ra) != ((y, y2) in rb) or ((x2, x) in ra) != ((y2, y) in rb):
                    return False
        for i, (ta, tb) in enumerate(ops):
            fx = ta[x]
            if fx == x:
                if tb[y] != y:
                    return False
            elif fx in m and m[fx] != tb[y]:
                return False
            for x2 in pre_a[i].get(x, ()):
                if x2 in m and tb[m[x2]] != y:
                    return False
        return True

    def extend(i):
        if i == len(order):
            return True
        x = order[i]
        for y in by_inv[inv_a[x]]:
            if y in used or not consistent(x, y):
                continue
            m[x] = y
            used.add(y)
            if extend(i + 1):
                return True
            del m[x]
            used.discard(y)
        return False

    if extend(0):
        return Embedding(m)
    return None


def is_isomorphic(a: Structure, b: Structure) -> bool:
    return find_isomorphism(a, b) is not None


@dataclass(frozen=True)
class TbaTriple:
    """A validated triple to be amalgamated: C = A ∩ B, C a substructure of both."""

    a: Structure
    b: Structure
    c: Structure

    @property
    def signature(self) -> Signature:
        return self.a.signature

    @property
    def only_a(self) -> frozenset:
        return self.a.domain - self.b.domain

    @property
    def only_b(self) -> frozenset:
        return self.b.domain - self.a.domain

    @property
    def union_domain(self) -> frozenset:
        return self.a.domain | self.b.domain


def validate_tba(a: Structure, b: Structure, c: Structure) -> TbaTriple:
    _same_signature(a, b, c)
    if a.domain & b.domain != c.domain:
        raise DomainMismatch(
            f"A ∩ B = {sorted(a.domain & b.domain)} but C = {sorted(c.domain)}")
    for name, big in (("A", a), ("B", b)):
        if not is_substructure(c, big):
            raise NotSubstructure(f"C is not a substructure of {name}")
    for name, s in (("A", a), ("B", b), ("C", c)):
        report = check_conformance(s)
        if not report.passed:
            first = report.failures()[0]
            raise NotConformant(f"{name} violates {first.axiom} at {first.witness}", report)
    return TbaTriple(a, b, c)
