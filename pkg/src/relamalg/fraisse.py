"""Finite stages of Fraïssé limits, age enumeration, and homogeneity checks.

A one-point extension type over an ordered base ``(u0, ..., uk-1)`` is
encoded as a *code*: a tuple holding the operation values of the new point
(as base positions, ``-1`` for the point itself), its loops, and for each
base element the pair of bits ``(u R z, z R u)`` per relation.  An element
``z`` of a stage realizes a request when its code over the base equals the
request's code.

For signatures without operations the stage keeps one bitset (a Python int)
per element and direction, so a realization test is a handful of ANDs and
the level-k checks split the whole stage by type one base element at a time.
"""

from __future__ import annotations

import itertools
import random
from collections import deque
from dataclasses import dataclass, field

from .amalgamation import amalgamate
from .core import (
    SYMMETRIC,
    Signature,
    Structure,
    TbaTriple,
    check_conformance,
    empty_structure,
    find_isomorphism,
    induced_substructure,
    validate_tba,
)
from .errors import BudgetExceeded, SignatureMismatch
from .oracle import cross_atoms, union_tables
from .solver import FOUND, build_problem, random_first

NEW = "new"
MAX_BASE = 4
RANDOM = "random"
CONSTRUCTIVE = "constructive"


# -- one-point extensions -----------------------------------------------------

def _fresh_token(s: Structure) -> str:
    token, i = NEW, 0
    while token in s.domain:
        i += 1
        token = f"{NEW}{i}"
    return token


def _table_choices(s: Structure, fresh: str):
    """All ways to give ``fresh`` operation values (bijective ops fix it)."""
    sig = s.signature
    options = []
    for op in sig.operations:
        options.append([fresh] if op.bijective else sorted(s.domain) + [fresh])
    for values in itertools.product(*options):
        yield {op.name: {**s.table(op.name), fresh: v} for op, v in zip(sig.operations, values)}


def one_point_extensions(s: Structure, sig: Signature | None = None,
                         fresh: str | None = None) -> list:
    """Every conformant structure on ``s.domain + {fresh}`` inducing ``s``.

    Distinct results are never isomorphic over ``s``: an isomorphism fixing
    ``s`` pointwise must fix the single new point too.
    """
    if sig is not None and sig != s.signature:
        raise SignatureMismatch("signature differs from the structure's")
    sig = s.signature
    fresh = fresh or _fresh_token(s)
    if fresh in s.domain:
        raise ValueError(f"{fresh!r} already in the domain")
    domain = s.domain | {fresh}
    fixed = {(rel, x, y): True for rel, pairs in s.extents.items() for x, y in pairs}
    atoms = []
    for rel in sig.relation_names:
        atoms.append((rel, fresh, fresh))
        for x in s.order:
            atoms += [(rel, x, fresh), (rel, fresh, x)]
    out = []
    for tables in _table_choices(s, fresh):
        problem = build_problem(sig, domain, fixed, atoms, tables)
        if problem.infeasible:
            continue
        for model in problem.models():
            extents = {rel: set(pairs) for rel, pairs in s.extents.items()}
            for (rel, x, y), val in model.items():
                if val:
                    extents[rel].add((x, y))
            t = Structure(sig, domain, extents, tables)
            if check_conformance(t).passed:
                out.append(t)
    return out


# -- enumeration --------------------------------------------------------------

def _cheap_invariant(s: Structure) -> tuple:
    return (len(s),) + tuple(len(s.extent(r)) for r in s.signature.relation_names)


def _dedupe(structures) -> list:
    buckets = {}
    out = []
    for s in structures:
        bucket = buckets.setdefault(_cheap_invariant(s), [])
        if any(find_isomorphism(s, t) is not None for t in bucket):
            continue
        bucket.append(s)
        out.append(s)
    return out


def _brute_force(sig: Signature, size: int, budget: int) -> list:
    domain = [f"x{i}" for i in range(size)]
    atoms = [(rel, x, y) for rel in sig.relation_names for x in domain for y in domain]
    choices = []
    for op in sig.operations:
        if op.bijective:
            choices.append([dict(zip(domain, p)) for p in itertools.permutations(domain)])
        else:
            choices.append([dict(zip(domain, v)) for v in itertools.product(domain, repeat=size)])
    combos = 1
    for c in choices:
        combos *= len(c)
    if combos > budget:
        raise BudgetExceeded(f"{combos} operation tables at size {size}")
    out = []
    for tabs in itertools.product(*choices):
        tables = {op.name: t for op, t in zip(sig.operations, tabs)}
        problem = build_problem(sig, domain, {}, atoms, tables)
        if problem.infeasible:
            continue
        for model in problem.models(budget=budget):
            extents = {rel: [] for rel in sig.relation_names}
            for (rel, x, y), val in model.items():
                if val:
                    extents[rel].append((x, y))
            s = Structure(sig, domain, extents, tables)
            if check_conformance(s).passed:
                out.append(s)
    return out


def enumerate_structures(sig: Signature, n: int, budget: int = 10 ** 6) -> list:
    """Conformant structures of every size 0..n, one per isomorphism class.

    Without operations the classes of size m are grown from those of size
    m - 1 (the axioms are universal, so deleting a point keeps conformance).
    With operations every table is tried, subject to ``budget``.
    """
    if n < 0:
        raise ValueError("n must be non-negative")
    if sig.operations:
        out = []
        for size in range(n + 1):
            out += _dedupe(_brute_force(sig, size, budget))
        return out
    level = [empty_structure(sig)]
    out = list(level)
    for size in range(1, n + 1):
        grown = (t for s in level for t in one_point_extensions(s, fresh=f"x{size - 1}"))
        level = _dedupe(grown)
        if len(out) + len(level) > budget:
            raise BudgetExceeded(f"more than {budget} classes")
        out += level
    return out


# -- type codes ---------------------------------------------------------------

def type_code(m: Structure, base, z: str):
    """Code of ``z`` over the ordered ``base``; None if base + z is not closed."""
    pos = {u: i for i, u in enumerate(base)}
    ops = []
    for name in m.signature.operation_names:
        v = m.table(name)[z]
        if v == z:
            ops.append(-1)
        elif v in pos:
            ops.append(pos[v])
        else:
            return None
    exts = [m.extent(r) for r in m.signature.relation_names]
    loops = tuple((z, z) in e for e in exts)
    rows = tuple(tuple(((u, z) in e, (z, u) in e) for e in exts) for u in base)
    return (tuple(ops), loops) + rows


def base_key(m: Structure, base) -> tuple:
    """Isomorphism type of the ordered base (relations and operation tables)."""
    pos = {u: i for i, u in enumerate(base)}
    rels = tuple(tuple((x, y) in m.extent(r) for x in base for y in base)
                 for r in m.signature.relation_names)
    ops = tuple(tuple(pos.get(m.table(o)[x], -1) for x in base) for o in m.signature.operation_names)
    return rels, ops


class _Types:
    """Cache: base type -> [(code, template)] over tokens u0.. and NEW.

    The key is either :func:`base_key` or, on the bitset path, the chain of
    codes of each base element over its predecessors (which pins down the
    ordered base just as well).
    """

    def __init__(self):
        self.cache = {}
        self.by_chain = {}

    def required_chain(self, m: Structure, base, chain) -> list:
        """[(code, packed code, template)] for an operation-free signature."""
        hit = self.by_chain.get(chain)
        if hit is None:
            hit = self.by_chain[chain] = [(c, pack(c), t) for c, t in self.required(m, base)]
        return hit

    def required(self, m: Structure, base) -> list:
        key = base_key(m, base)
        hit = self.cache.get(key)
        if hit is None:
            tokens = [f"u{i}" for i in range(len(base))]
            ren = dict(zip(base, tokens))
            small = induced_substructure(m, base)
            small = Structure(m.signature, tokens,
                              {r: [(ren[x], ren[y]) for x, y in p] for r, p in small.extents.items()},
                              {o: {ren[x]: ren[v] for x, v in t.items()} for o, t in small.tables.items()})
            hit = [(type_code(t, tokens, NEW), t) for t in one_point_extensions(small, fresh=NEW)]
            self.cache[key] = hit
        return hit


def _closed(m: Structure, base) -> bool:
    s = set(base)
    return all(t[x] in s for t in m.tables.values() for x in base)


class _BitIndex:
    """Per-relation successor/predecessor bitsets of a growing structure."""

    def __init__(self, sig: Signature):
        self.rels = sig.relation_names
        self.symmetric = {r for r, props in sig.relations if SYMMETRIC in props}
        self.elements = []
        self.bit = {}
        self.out = {r: {} for r in self.rels}
        self.inn = {r: {} for r in self.rels}
        self.loop = {r: 0 for r in self.rels}
        self.all = 0

    def add(self, m: Structure, v: str):
        b = 1 << len(self.elements)
        self.bit[v] = b
        self.elements.append(v)
        self.all |= b
        for r in self.rels:
            ext = m.extent(r)
            out, inn = self.out[r], self.inn[r]
            out[v] = inn[v] = 0
            for x in self.elements:
                bx = self.bit[x]
                if (x, v) in ext:
                    out[x] |= b
                    inn[v] |= bx
                if (v, x) in ext:
                    out[v] |= bx
                    inn[x] |= b
            if (v, v) in ext:
                self.loop[r] |= b

    @classmethod
    def of(cls, m: Structure, order=None) -> "_BitIndex":
        idx = cls(m.signature)
        for v in order or m.order:
            idx.add(m, v)
        return idx

    def root(self) -> dict:
        """Packed code prefix -> bitset of elements, split by loops only."""
        parts = {1: self.all}
        for r in self.rels:
            parts = _split(parts, self.loop[r])
        return parts

    def refine(self, parts: dict, u: str) -> dict:
        """Extend every packed code by the bits of base element ``u``."""
        excl = ~self.bit[u]
        parts = {c: mask & excl for c, mask in parts.items() if mask & excl}
        for r in self.rels:
            if r in self.symmetric:
                parts = _split(parts, self.out[r][u], both=True)
            else:
                parts = _split(parts, self.out[r][u])
                parts = _split(parts, self.inn[r][u])
        return parts

    def locate(self, parts: dict, u: str):
        """Code (over the current base) of the element ``u``."""
        b = self.bit[u]
        for c, mask in parts.items():
            if mask & b:
                return c
        raise KeyError(u)

    def walk(self, elems, k: int, ordered: bool = False, start=None):
        """Yield (base, chain, parts) for every base of at most ``k`` elements
        of ``elems``: subsets in the given order, or all arrangements."""
        def rec(i0, base, parts, chain):
            yield base, chain, parts
            if len(base) == k:
                return
            for i in range(0 if ordered else i0, len(elems)):
                u = elems[i]
                if ordered and u in base:
                    continue
                yield from rec(i + 1, base + (u,), self.refine(parts, u),
                               chain + (self.locate(parts, u),))

        root = self.root() if start is None else start
        yield from rec(0, (), root, ())

    def realizes(self, base, code) -> bool:
        mask = self.all
        for u in base:
            mask &= ~self.bit[u]
        loops = code[1]
        for r, want in zip(self.rels, loops):
            mask = mask & self.loop[r] if want else mask & ~self.loop[r]
        for u, row in zip(base, code[2:]):
            for r, (fwd, back) in zip(self.rels, row):
                o, i = self.out[r][u], self.inn[r][u]
                mask = mask & o if fwd else mask & ~o
                mask = mask & i if back else mask & ~i
                if not mask:
                    return False
        return bool(mask)


def _split(parts: dict, bits: int, both: bool = False) -> dict:
    """Append one bit (two equal bits with ``both``) to every code."""
    out = {}
    shift, one = (4, 3) if both else (2, 1)
    for c, mask in parts.items():
        yes = mask & bits
        if yes:
            out[shift * c + one] = yes
        no = mask ^ yes
        if no:
            out[shift * c] = no
    return out


def pack(code) -> int:
    """Integer form of an operation-free code, as produced by the bitset path."""
    v = 1
    for bit in code[1]:
        v = 2 * v + bit
    for row in code[2:]:
        for fwd, back in row:
            v = 4 * v + 2 * fwd + back
    return v


# -- stages -------------------------------------------------------------------

@dataclass(frozen=True)
class ExtensionRequest:
    """Realize ``target`` (base plus the point ``NEW``) over ``base``."""

    base: tuple
    code: tuple
    target: Structure

    def __post_init__(self):
        if not set(self.base) < self.target.domain or len(self.target) != len(self.base) + 1:
            raise ValueError("target must be the base plus one point")


def _rename_template(template: Structure, base, new: str, rename_new=NEW) -> Structure:
    ren = {f"u{i}": u for i, u in enumerate(base)}
    ren[rename_new] = new
    return Structure(template.signature, [ren[x] for x in template.domain],
                     {r: [(ren[x], ren[y]) for x, y in p] for r, p in template.extents.items()},
                     {o: {ren[x]: ren[v] for x, v in t.items()} for o, t in template.tables.items()})


def random_strong_amalgam(t: TbaTriple, rng: random.Random, p_true: float = 0.5) -> Structure:
    """A strong amalgam whose free cross pairs are drawn at random.

    Falls back to the constructive amalgam when the random search fails.
    """
    free = cross_atoms(t)
    tables = union_tables(t)
    fixed = {(r, x, y): True for s in (t.a, t.b) for r, p in s.extents.items() for x, y in p}
    problem = build_problem(t.signature, t.union_domain, fixed, free, tables)
    order = list(range(len(free)))
    rng.shuffle(order)
    result = problem.solve(order=order, first=random_first(rng, p_true), budget=100_000)
    if result.status == FOUND:
        extents = {r: set(t.a.extent(r) | t.b.extent(r)) for r in t.signature.relation_names}
        for (r, x, y), val in result.assignment.items():
            if val:
                extents[r].add((x, y))
        d = Structure(t.signature, t.union_domain, extents, tables)
        if check_conformance(d).passed:
            return d
    return amalgamate(t).d


def _check_supported(sig: Signature):
    e = empty_structure(sig)
    amalgamate(validate_tba(e, e, e))


def _batch(m: Structure, born: list, j: int, types: _Types, idx: "_BitIndex | None"):
    """Unrealized requests born with element ``born[j]``; ``j = -1`` is the empty base.

    Realized requests are dropped at once: strong amalgams never alter the
    existing stage, so they stay realized.
    """
    if idx is not None:
        out = []
        if j < 0:
            walks = [((), (), idx.root())]
        else:
            v = born[j]
            walks = ((base + (v,), chain + (idx.locate(parts, v),), idx.refine(parts, v))
                     for base, chain, parts in idx.walk(born[:j], MAX_BASE - 1))
        for base, chain, parts in walks:
            for code, packed, template in types.required_chain(m, base, chain):
                if packed not in parts:
                    out.append((base, code, template))
        return out
    if j < 0:
        bases = [()]
    else:
        v, older = born[j], born[:j]
        bases = [tuple(c) + (v,) for k in range(MAX_BASE) for c in itertools.combinations(older, k)]
    out = []
    for base in bases:
        if not _closed(m, base):
            continue
        for code, template in types.required(m, base):
            if not _realized(m, None, base, code):
                out.append((base, code, template))
    return out


def _realized(m: Structure, idx: _BitIndex | None, base, code) -> bool:
    if idx is not None:
        return idx.realizes(base, code)
    return any(type_code(m, base, z) == code for z in m.order if z not in base)


def build_stage(sig: Signature, steps: int, seed: int, amalgam: str = RANDOM,
                history: list | None = None) -> Structure:
    """Grow a stage by ``steps`` realized extension requests.

    Requests are served first in, first out by the birth of their newest
    base element; those born together are shuffled with ``seed``.  A request
    already realized by the current stage is discarded without using a
    step, so every step adds exactly one element.  ``amalgam`` picks the
    strong amalgam used: ``random`` draws the undetermined cross pairs,
    ``constructive`` uses the dispatcher.  ``history`` (if given) receives
    the stage after every step.
    """
    if amalgam not in (RANDOM, CONSTRUCTIVE):
        raise ValueError(f"unknown amalgam mode {amalgam!r}")
    _check_supported(sig)
    rng = random.Random(seed)
    types = _Types()
    has_ops = bool(sig.operations)
    m = empty_structure(sig)
    idx = None if has_ops else _BitIndex(sig)
    born = []
    queue = deque()
    next_batch = -1
    done = 0
    while done < steps:
        if not queue:
            # batches are built lazily, in birth order, once the previous one is spent
            if next_batch >= len(born):
                break
            batch = _batch(m, born, next_batch, types, idx)
            next_batch += 1
            rng.shuffle(batch)
            queue.extend(batch)
            continue
        base, code, template = queue.popleft()
        if _realized(m, idx, base, code):
            continue
        new = f"v{len(born)}"
        target = _rename_template(template, base, new)
        t = validate_tba(m, target, induced_substructure(m, base))
        if amalgam == RANDOM:
            m = random_strong_amalgam(t, rng)
        else:
            m = amalgamate(t).d
        born.append(new)
        if idx is not None:
            idx.add(m, new)
        done += 1
        if history is not None:
            history.append(m)
    return m


# -- checks -------------------------------------------------------------------

@dataclass
class CoverageReport:
    """Counts of realized requirements; ``failures`` holds the first few misses."""

    check: str
    level: int
    total: int = 0
    realized: int = 0
    failures: list = field(default_factory=list)
    max_failures: int = 20

    @property
    def fraction(self) -> float:
        return 1.0 if self.total == 0 else self.realized / self.total

    @property
    def passed(self) -> bool:
        return self.realized == self.total

    def record(self, ok: bool, witness, count: int = 1):
        self.total += count
        if ok:
            self.realized += count
        elif len(self.failures) < self.max_failures:
            self.failures.append(witness)

    def to_text(self) -> str:
        lines = [f"check\t{self.check}", f"level\t{self.level}", f"total\t{self.total}",
                 f"realized\t{self.realized}", f"fraction\t{self.fraction:.6f}"]
        lines += [f"FAIL\t{w}" for w in self.failures]
        return "\n".join(lines) + "\n"


def _index_order(m: Structure, order):
    return list(order) if order is not None else list(m.order)


def check_extension_property(m: Structure, sig: Signature | None = None, k: int = 2,
                             order=None) -> CoverageReport:
    """For every base of at most ``k`` elements and every one-point type over it,
    is the type realized by an element outside the base?

    An empty ``m`` with k = 0 yields one unrealized requirement.
    """
    if sig is not None and sig != m.signature:
        raise SignatureMismatch("signature differs from the structure's")
    report = CoverageReport("extension", k)
    types = _Types()
    elems = _index_order(m, order)
    if m.signature.operations:
        for size in range(k + 1):
            for base in itertools.combinations(elems, size):
                if not _closed(m, base):
                    continue
                have = {type_code(m, base, z) for z in elems if z not in base}
                for code, _ in types.required(m, base):
                    report.record(code in have, (base, code))
        return report
    idx = _BitIndex.of(m, elems)
    for base, chain, parts in idx.walk(elems, k):
        for code, packed, _ in types.required_chain(m, base, chain):
            report.record(packed in parts, (base, code))
    return report


def _realized_groups(m: Structure, k: int, elems) -> dict:
    """Base type -> {realized code set: [count, first ordered base]} over bases of 1..k elements."""
    groups = {}

    def put(key, base, codes):
        slot = groups.setdefault(key, {}).setdefault(codes, [0, base])
        slot[0] += 1

    if m.signature.operations:
        for size in range(1, k + 1):
            for base in itertools.permutations(elems, size):
                if _closed(m, base):
                    codes = {type_code(m, base, z) for z in elems if z not in base}
                    put(base_key(m, base), base, frozenset(codes - {None}))
        return groups
    idx = _BitIndex.of(m, elems)
    for base, chain, parts in idx.walk(elems, k, ordered=True):
        if base:
            put(chain, base, frozenset(parts))
    return groups


def check_partial_homogeneity(m: Structure, k: int = 1, order=None) -> CoverageReport:
    """Over every isomorphism between substructures of 1..k elements, does it
    extend to each additional point?  A map U -> V extends exactly when every
    type realized over U is realized over V.
    """
    report = CoverageReport("homogeneity", k)
    groups = _realized_groups(m, k, _index_order(m, order))
    for key in sorted(groups, key=repr):
        members = groups[key]
        for x in sorted(members, key=repr):
            cx, bx = members[x]
            for y in sorted(members, key=repr):
                cy, by = members[y]
                report.record(x <= y, (bx, by), cx * cy)
    return report


def stage_is_chain(history: list) -> bool:
    """Each stage is an induced substructure of the next and grows by one."""
    for s, t in zip(history, history[1:]):
        if len(t) != len(s) + 1 or induced_substructure(t, s.domain) != s:
            return False
    return True


__all__ = [
    "CONSTRUCTIVE",
    "CoverageReport",
    "ExtensionRequest",
    "RANDOM",
    "build_stage",
    "check_extension_property",
    "check_partial_homogeneity",
    "enumerate_structures",
    "one_point_extensions",
    "random_strong_amalgam",
    "stage_is_chain",
    "type_code",
]
