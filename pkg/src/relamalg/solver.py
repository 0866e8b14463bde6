"""Clause-level search over relation atoms.

Every axiom handled by the package (the five relation properties,
coarseness, preservation, reversal, strictness) is a universal sentence whose
ground instances over a fixed finite domain are clauses of at most three
atoms ``(relation, x, y)``.  :func:`build_problem` grounds them with some atoms
fixed and the rest free; :class:`Problem` runs DPLL with unit propagation.

Only instances that mention at least one free atom are emitted.  Instances
over fixed atoms alone do not depend on the assignment, so callers re-check
any model with :func:`relamalg.core.check_conformance`; a failure there means
no model exists at all.
"""

from __future__ import annotations

import itertools
import random
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping

from .core import (
    ANTIREFLEXIVE,
    ANTISYMMETRIC,
    REFLEXIVE,
    SYMMETRIC,
    TRANSITIVE,
    Signature,
)

Atom = tuple  # (relation, x, y)

FOUND = "found"
EXHAUSTED = "exhausted"
BUDGET = "budget_exceeded"


class _Infeasible(Exception):
    pass


@dataclass
class SearchResult:
    status: str
    assignment: dict | None
    nodes: int


class Problem:
    """Boolean satisfiability over named atoms, clauses as literal tuples.

    Literals are ints: ``2*v`` asserts variable ``v`` true, ``2*v + 1`` false.
    """

    def __init__(self, atoms: list, clauses: Iterable[tuple], infeasible: bool = False):
        self.atoms = list(atoms)
        self.index = {a: i for i, a in enumerate(self.atoms)}
        self.clauses = [tuple(c) for c in clauses]
        self.infeasible = infeasible or any(len(c) == 0 for c in self.clauses)
        self.occurs = [[] for _ in range(2 * len(self.atoms))]
        for ci, clause in enumerate(self.clauses):
            for lit in clause:
                self.occurs[lit].append(ci)

    def __len__(self):
        return len(self.atoms)

    # -- propagation ---------------------------------------------------
    def _propagate(self, value, trail, queue) -> bool:
        clauses, occurs = self.clauses, self.occurs
        while queue:
            lit = queue.pop()
            for ci in occurs[lit ^ 1]:
                unassigned = -1
                count = 0
                for l2 in clauses[ci]:
                    v = value[l2 >> 1]
                    if v < 0:
                        count += 1
                        unassigned = l2
                    elif v == (l2 & 1) ^ 1:
                        break
                else:
                    if count == 0:
                        return False
                    if count == 1:
                        value[unassigned >> 1] = (unassigned & 1) ^ 1
                        trail.append(unassigned >> 1)
                        queue.append(unassigned)
        return True

    def _initial(self):
        value = [-1] * len(self.atoms)
        trail = []
        if self.infeasible:
            return None, trail
        queue = []
        for clause in self.clauses:
            if len(clause) == 1:
                lit = clause[0]
                v = value[lit >> 1]
                want = (lit & 1) ^ 1
                if v == -1:
                    value[lit >> 1] = want
                    trail.append(lit >> 1)
                    queue.append(lit)
                elif v != want:
                    return None, trail
        if not self._propagate(value, trail, queue):
            return None, trail
        return value, trail

    def forced(self) -> dict | None:
        """Atoms fixed by unit propagation alone; None if that already conflicts."""
        value, _ = self._initial()
        if value is None:
            return None
        return {self.atoms[i]: bool(v) for i, v in enumerate(value) if v >= 0}

    # -- search --------------------------------------------------------
    def _search(self, order, first: Callable[[int], bool], budget, all_models):
        value, trail = self._initial()
        nodes = 0
        if value is None:
            return
        order = list(order) if order is not None else list(range(len(self.atoms)))
        stack = []  # (position in order, variable, tried_second, trail length)
        pos = 0
        while True:
            while pos < len(order) and value[order[pos]] >= 0:
                pos += 1
            if pos == len(order):
                yield nodes, dict(zip(self.atoms, (bool(v) for v in value)))
                if not all_models:
                    return
                ok = False
            else:
                var = order[pos]
                nodes += 1
                if budget is not None and nodes > budget:
                    yield nodes, BUDGET
                    return
                pol = first(var)
                stack.append((pos, var, False, len(trail)))
                value[var] = int(pol)
                trail.append(var)
                ok = self._propagate(value, trail, [2 * var + (0 if pol else 1)])
            while not ok:
                if not stack:
                    yield nodes, None
                    return
                p, var, tried, mark = stack.pop()
                for v in trail[mark:]:
                    value[v] = -1
                del trail[mark:]
                if tried:
                    continue
                nodes += 1
                if budget is not None and nodes > budget:
                    yield nodes, BUDGET
                    return
                pol = not first(var)
                stack.append((p, var, True, mark))
                value[var] = int(pol)
                trail.append(var)
                pos = p
                ok = self._propagate(value, trail, [2 * var + (0 if pol else 1)])

    def solve(self, order=None, first: Callable[[int], bool] | None = None,
              budget: int | None = None) -> SearchResult:
        """First model in DPLL order (default: given variable order, false before true)."""
        first = first or (lambda v: False)
        nodes = 0
        for nodes, model in self._search(order, first, budget, all_models=False):
            if model == BUDGET:
                return SearchResult(BUDGET, None, nodes)
            if model is None:
                return SearchResult(EXHAUSTED, None, nodes)
            return SearchResult(FOUND, model, nodes)
        return SearchResult(EXHAUSTED, None, nodes)

    def models(self, order=None, budget: int | None = None):
        """Every model, in DPLL order."""
        for _, model in self._search(order, lambda v: False, budget, all_models=True):
            if model is None:
                return
            if model == BUDGET:
                from .errors import BudgetExceeded
                raise BudgetExceeded(f"more than {budget} search nodes")
            yield model


def build_problem(signature: Signature, domain: Iterable[str], fixed: Mapping[Atom, bool],
                  free: Iterable[Atom], tables: Mapping[str, Mapping[str, str]]) -> Problem:
    """Ground the signature's axioms over ``domain``.

    ``fixed`` gives known atoms; atoms neither fixed nor free are false.
    ``tables`` must be total.  Variables are numbered in the order of ``free``.
    """
    domain = sorted(domain)
    free = list(free)
    index = {a: i for i, a in enumerate(free)}
    clauses = set()

    def lit(atom, positive):
        """Literal for ``atom``; True/False when the atom is fixed."""
        i = index.get(atom)
        if i is None:
            val = fixed.get(atom, False)
            return val if positive else not val
        return 2 * i + (0 if positive else 1)

    def emit(*lits):
        out = set()
        for l in lits:
            if l is True:
                return
            if l is not False:
                out.add(l)
        if not out:
            raise _Infeasible
        for l in out:
            if l ^ 1 in out:
                return
        clauses.add(tuple(sorted(out)))

    free_by_rel = {}
    for atom in free:
        free_by_rel.setdefault(atom[0], []).append(atom)

    try:
        for rel, props in signature.relations:
            rfree = free_by_rel.get(rel, [])
            if not rfree:
                continue
            if TRANSITIVE in props:
                triples = set()
                for _, p, q in rfree:
                    for z in domain:
                        triples.add((p, q, z))
                        triples.add((z, p, q))
                        triples.add((p, z, q))
                for x, y, z in triples:
                    emit(lit((rel, x, y), False), lit((rel, y, z), False), lit((rel, x, z), True))
            for _, p, q in rfree:
                if p == q:
                    if REFLEXIVE in props:
                        emit(lit((rel, p, p), True))
                    if ANTIREFLEXIVE in props:
                        emit(lit((rel, p, p), False))
                    continue
                if SYMMETRIC in props:
                    emit(lit((rel, p, q), False), lit((rel, q, p), True))
                    emit(lit((rel, q, p), False), lit((rel, p, q), True))
                if ANTISYMMETRIC in props:
                    emit(lit((rel, p, q), False), lit((rel, q, p), False))
        for finer, coarser in signature.coarser_than:
            for atom in free_by_rel.get(finer, []) + free_by_rel.get(coarser, []):
                _, p, q = atom
                emit(lit((finer, p, q), False), lit((coarser, p, q), True))
        for op in signature.operations:
            f = tables[op.name]
            if op.bijective and len(set(f[x] for x in domain)) != len(domain):
                raise _Infeasible
            for rel in op.touched:
                rfree = set(free_by_rel.get(rel, []))
                if not rfree:
                    continue
                for x, y in itertools.product(domain, repeat=2):
                    src = (rel, x, y)
                    if rel in op.preserves:
                        img = (rel, f[x], f[y])
                        if src in rfree or img in rfree:
                            emit(lit(src, False), lit(img, True))
                    if rel in op.reverses:
                        img = (rel, f[y], f[x])
                        if src in rfree or img in rfree:
                            emit(lit(src, False), lit(img, True))
                    if op.strict and x != y and f[x] == f[y] and src in rfree:
                        emit(lit(src, False))
    except _Infeasible:
        return Problem(free, [], infeasible=True)
    return Problem(free, sorted(clauses))


def random_first(rng: random.Random, p_true: float) -> Callable[[int], bool]:
    """Polarity chooser that draws true with probability ``p_true``.

    Choices are memoised per variable so retries after backtracking are
    deterministic given the generator state.
    """
    memo = {}

    def first(v):
        if v not in memo:
            memo[v] = rng.random() < p_true
        return memo[v]

    return first
