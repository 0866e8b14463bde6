"""Random conformant structures and triples to be amalgamated.

A random extension fixes everything inside the base, draws operation values
for the new elements, and then lets the clause search pick the relation
atoms that touch new elements in a random order with random polarity.  When
the drawn tables admit no model the draw is repeated; the last resort maps
new elements to themselves and keeps them unrelated to everything, which
conforms whenever the base does (the class is closed under that
extension unless it forces loops and forbids them at once, in which case the
base is returned unchanged).
"""

from __future__ import annotations

import itertools
import random
from typing import Sequence

from .core import (
    PROPERTIES,
    OperationSpec,
    Signature,
    Structure,
    TbaTriple,
    check_conformance,
    empty_structure,
    validate_tba,
)
from .solver import FOUND, build_problem, random_first

DENSITIES = (0.1, 0.25, 0.5, 0.75)


def _extension_atoms(sig: Signature, old: Sequence[str], new: Sequence[str]) -> list:
    atoms = []
    everything = list(old) + list(new)
    for rel in sig.relation_names:
        for x in new:
            for y in everything:
                atoms.append((rel, x, y))
                if y not in new:
                    atoms.append((rel, y, x))
    return atoms


def _random_tables(base: Structure, new: list, rng: random.Random, identity: bool) -> dict:
    domain = sorted(base.domain) + new
    tables = {}
    for op in base.signature.operations:
        table = dict(base.table(op.name))
        if identity:
            table.update({x: x for x in new})
        elif op.bijective:
            image = list(new)
            rng.shuffle(image)
            table.update(zip(new, image))
        else:
            table.update({x: rng.choice(domain) for x in new})
        tables[op.name] = table
    return tables


def random_extension(base: Structure, new: Sequence[str], rng: random.Random,
                     p_true: float | None = None, attempts: int = 6) -> Structure:
    new = sorted(new)
    if not new:
        return base
    if set(new) & base.domain:
        raise ValueError("new tokens collide with the base domain")
    sig = base.signature
    p_true = rng.choice(DENSITIES) if p_true is None else p_true
    fixed = {(rel, x, y): True for rel, pairs in base.extents.items() for x, y in pairs}
    atoms = _extension_atoms(sig, sorted(base.domain), new)
    domain = base.domain | set(new)
    for attempt in range(attempts + 1):
        identity = attempt == attempts
        tables = _random_tables(base, new, rng, identity)
        problem = build_problem(sig, domain, fixed, atoms, tables)
        order = list(range(len(atoms)))
        rng.shuffle(order)
        first = (lambda v: False) if identity else random_first(rng, p_true)
        result = problem.solve(order=order, first=first, budget=100_000)
        if result.status != FOUND:
            continue
        extents = {rel: set(pairs) for rel, pairs in base.extents.items()}
        for (rel, x, y), val in result.assignment.items():
            if val:
                extents[rel].add((x, y))
        s = Structure(sig, domain, extents, tables)
        if check_conformance(s).passed:
            return s
    return base


def random_structure(sig: Signature, size: int, rng: random.Random, prefix: str = "x",
                     p_true: float | None = None) -> Structure:
    return random_extension(empty_structure(sig), [f"{prefix}{i}" for i in range(size)], rng, p_true)


def random_triple(sig: Signature, rng: random.Random, max_size: int = 6) -> TbaTriple:
    """Random valid triple with |A|, |B| <= max_size."""
    n_c = rng.randint(0, max_size)
    n_a = rng.randint(0, max_size - n_c)
    n_b = rng.randint(0, max_size - n_c)
    c = random_structure(sig, n_c, rng, "c")
    a = random_extension(c, [f"a{i}" for i in range(n_a)], rng)
    b = random_extension(c, [f"b{i}" for i in range(n_b)], rng)
    return validate_tba(a, b, c)


def all_property_sets() -> list:
    """The 32 subsets of the five properties, in binary-counting order."""
    return [frozenset(p for i, p in enumerate(PROPERTIES) if mask >> i & 1) for mask in range(32)]


def random_operations(rng: random.Random, rels: Sequence[str], n_preserving: int,
                      n_reversing: int) -> tuple:
    ops = [OperationSpec(f"f{i}", frozenset(rels), frozenset()) for i in range(n_preserving)]
    ops += [OperationSpec(f"g{i}", frozenset(), frozenset(rels)) for i in range(n_reversing)]
    return tuple(ops)


def pair_signature(p, q, operations=()) -> Signature:
    return Signature((("R", frozenset(p)), ("S", frozenset(q))), frozenset({("R", "S")}),
                     tuple(operations))


def pair_operations(rng: random.Random, count: int) -> tuple:
    """Operation specs of the four supported shapes for a finer R and coarser S."""
    shapes = [
        (frozenset({"R", "S"}), frozenset()),
        (frozenset(), frozenset({"R", "S"})),
        (frozenset({"R"}), frozenset()),
        (frozenset(), frozenset({"R"})),
    ]
    return tuple(OperationSpec(f"h{i}", *rng.choice(shapes)) for i in range(count))


def random_properties(rng: random.Random, *, include=(), exclude=()) -> frozenset:
    props = {p for p in PROPERTIES if rng.random() < 0.5}
    return frozenset((props | set(include)) - set(exclude))


def iter_subsets(items):
    items = list(items)
    return itertools.chain.from_iterable(itertools.combinations(items, k) for k in range(len(items) + 1))
