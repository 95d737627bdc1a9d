"""Minimal justifications for instance memberships.

A justification for ``individual : expr`` is a subset-minimal set of axioms
that still entails the membership (all declarations are kept, so dropping
assertions never makes a name unknown). Enumeration follows the classic
hitting-set-tree scheme: find one minimal justification by deletion-based
shrinking, then branch on each of its axioms being removed.

Entailment here is monotone (the expression language has no negation), so
minimality under deletion is well defined.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

from .ontology import (
    And,
    Atomic,
    Axiom,
    BoolAssertion,
    ClassAssertion,
    ClassExpression,
    EquivalentTo,
    Individual,
    Ontology,
    OntologyError,
    Or,
    RoleAssertion,
    Some,
    SubClassOf,
    Top,
    Value,
    print_axiom,
    print_manchester,
)

DEFAULT_NODE_BUDGET = 10_000


class NotEntailedError(OntologyError):
    """Asked to justify a membership the ontology does not entail."""


@dataclass(frozen=True)
class Justification:
    """One minimal axiom set entailing ``individual : expr``."""

    expr: ClassExpression
    individual: Individual
    axioms: frozenset[Axiom]

    def sorted_axioms(self) -> list[Axiom]:
        return sorted(self.axioms, key=print_axiom)

    def render(self) -> str:
        return "\n".join(print_axiom(a) for a in self.sorted_axioms())

    def _key(self) -> tuple[int, list[str]]:
        return (len(self.axioms), [print_axiom(a) for a in self.sorted_axioms()])


@dataclass(frozen=True)
class JustificationSet:
    """All minimal justifications found, smallest first.

    ``complete`` is False when the search tree hit its node budget, in which
    case the listing is a best effort rather than exhaustive.
    """

    justifications: tuple[Justification, ...]
    complete: bool = True


class _Checker:
    """Closed-world instance checks over a mutable axiom subset.

    Lighter than building an Ontology per candidate subset: plain dict
    indexes, rebuilt once per checker, with removals simulated by passing
    the set of removed axioms to ``entails``.
    """

    def __init__(self, axioms: frozenset[Axiom]):
        self.axioms = axioms
        self.removed: frozenset[Axiom] = frozenset()
        self._rebuild()

    def _rebuild(self) -> None:
        self.classes_of: dict[Individual, list[tuple[Axiom, str]]] = {}
        self.role_objects: dict[tuple[str, Individual], list[tuple[Axiom, Individual]]] = {}
        self.bool_facts: dict[tuple[str, Individual, bool], Axiom] = {}
        self.sub_edges: dict[str, list[tuple[Axiom, str]]] = {}
        self.definitions: dict[str, tuple[Axiom, ClassExpression]] = {}
        for axiom in self.axioms:
            if isinstance(axiom, ClassAssertion):
                self.classes_of.setdefault(axiom.individual, []).append((axiom, axiom.cls))
            elif isinstance(axiom, RoleAssertion):
                key = (axiom.role, axiom.subject)
                self.role_objects.setdefault(key, []).append((axiom, axiom.object))
            elif isinstance(axiom, BoolAssertion):
                self.bool_facts[(axiom.prop, axiom.individual, axiom.value)] = axiom
            elif isinstance(axiom, SubClassOf):
                self.sub_edges.setdefault(axiom.sub, []).append((axiom, axiom.sup))
            elif isinstance(axiom, EquivalentTo):
                self.definitions[axiom.name] = (axiom, axiom.expr)
                if isinstance(axiom.expr, Atomic):
                    self.sub_edges.setdefault(axiom.name, []).append((axiom, axiom.expr.name))
                    self.sub_edges.setdefault(axiom.expr.name, []).append((axiom, axiom.name))
        # removals only shrink reachability, so the full-module closure gives
        # a safe candidate list of definitions per target class
        self.removed = frozenset()
        self._supers_cache: dict[str, set[str]] = {}
        self.def_candidates: dict[str, list[str]] = {}
        for name in self.definitions:
            for target in self._supers(name):
                self.def_candidates.setdefault(target, []).append(name)
        self._supers_cache = {}

    def entails(self, expr: ClassExpression, ind: Individual, removed: frozenset[Axiom]) -> bool:
        self.removed = removed
        self._supers_cache = {}
        return self._check(expr, ind, frozenset())

    def _alive(self, axiom: Axiom) -> bool:
        return axiom not in self.removed

    def _supers(self, name: str) -> set[str]:
        cached = self._supers_cache.get(name)
        if cached is not None:
            return cached
        reached = {name}
        frontier = [name]
        while frontier:
            current = frontier.pop()
            for axiom, parent in self.sub_edges.get(current, ()):
                if self._alive(axiom) and parent not in reached:
                    reached.add(parent)
                    frontier.append(parent)
        self._supers_cache[name] = reached
        return reached

    def _check(
        self,
        expr: ClassExpression,
        ind: Individual,
        in_progress: frozenset[tuple[str, Individual]],
    ) -> bool:
        if isinstance(expr, Top):
            return True
        if isinstance(expr, Atomic):
            target = expr.name
            for axiom, cls in self.classes_of.get(ind, ()):
                if self._alive(axiom) and target in self._supers(cls):
                    return True
            for name in self.def_candidates.get(target, ()):
                axiom, body = self.definitions[name]
                if not self._alive(axiom) or target not in self._supers(name):
                    continue
                key = (name, ind)
                if key in in_progress:
                    continue
                if self._check(body, ind, in_progress | {key}):
                    return True
            return False
        if isinstance(expr, And):
            return all(self._check(c, ind, in_progress) for c in expr.children)
        if isinstance(expr, Or):
            return any(self._check(c, ind, in_progress) for c in expr.children)
        if isinstance(expr, Some):
            for axiom, obj in self.role_objects.get((expr.role, ind), ()):
                if self._alive(axiom) and self._check(expr.filler, obj, in_progress):
                    return True
            return False
        if isinstance(expr, Value):
            axiom = self.bool_facts.get((expr.prop, ind, expr.value))
            return axiom is not None and self._alive(axiom)
        raise TypeError(f"not a class expression: {expr!r}")


@lru_cache(maxsize=8)
def _module_index(
    ontology: Ontology,
) -> tuple[
    dict[Individual, tuple[Individual, ...]],
    dict[Individual, tuple[Axiom, ...]],
    tuple[Axiom, ...],
]:
    """Per-ontology indexes for module extraction, built once. Keyed on the
    ontology object so repeated justifications over one large ontology do
    not rescan its axiom set."""
    forward: dict[Individual, list[Individual]] = {}
    abox: dict[Individual, list[Axiom]] = {}
    tbox: list[Axiom] = []
    for axiom in ontology.axioms:
        if isinstance(axiom, (SubClassOf, EquivalentTo)):
            tbox.append(axiom)
        elif isinstance(axiom, (ClassAssertion, BoolAssertion)):
            abox.setdefault(axiom.individual, []).append(axiom)
        elif isinstance(axiom, RoleAssertion):
            forward.setdefault(axiom.subject, []).append(axiom.object)
            abox.setdefault(axiom.subject, []).append(axiom)
    return (
        {k: tuple(v) for k, v in forward.items()},
        {k: tuple(v) for k, v in abox.items()},
        tuple(tbox),
    )


def _relevance_module(ontology: Ontology, individual: Individual) -> frozenset[Axiom]:
    """Sound over-approximation of the axioms any justification for a
    membership of the individual can use: ABox axioms about individuals
    reachable from it through role assertions, plus the whole TBox (the
    TBox is small compared to the ABox in this pipeline)."""
    forward, abox, tbox = _module_index(ontology)
    reachable = {individual}
    frontier = [individual]
    while frontier:
        current = frontier.pop()
        for nxt in forward.get(current, ()):
            if nxt not in reachable:
                reachable.add(nxt)
                frontier.append(nxt)
    module = list(tbox)
    for ind in reachable:
        module.extend(abox.get(ind, ()))
    return frozenset(module)


def _shrink(
    checker: _Checker,
    module: frozenset[Axiom],
    expr: ClassExpression,
    ind: Individual,
    removed: frozenset[Axiom],
) -> frozenset[Axiom]:
    """One minimal entailing subset of ``module - removed``, by conflict-set
    style divide and conquer: split the candidate list in half, discard any
    half that is not needed, and recurse. Entailment is monotone here, so
    the result is subset-minimal. The candidate order is fixed (printed
    form), making the outcome deterministic."""
    base = sorted(module - removed, key=print_axiom)

    def holds(kept: tuple[Axiom, ...]) -> bool:
        return checker.entails(expr, ind, module - frozenset(kept))

    if holds(()):
        return frozenset()

    def qx(background: tuple[Axiom, ...], candidates: tuple[Axiom, ...]) -> tuple[Axiom, ...]:
        # invariant: holds(background + candidates) is True, holds(background) is False
        if len(candidates) == 1:
            return candidates
        mid = len(candidates) // 2
        left, right = candidates[:mid], candidates[mid:]
        if holds(background + left):
            return qx(background, left)
        if holds(background + right):
            return qx(background, right)
        need_right = qx(background + left, right)
        need_left = qx(background + need_right, left)
        return need_left + need_right

    return frozenset(qx((), tuple(base)))


@dataclass
class _HstSearch:
    checker: _Checker
    module: frozenset[Axiom]
    expr: ClassExpression
    ind: Individual
    node_budget: int
    found: list[frozenset[Axiom]] = field(default_factory=list)
    explored: int = 0
    complete: bool = True

    def run(self) -> None:
        first = _shrink(self.checker, self.module, self.expr, self.ind, frozenset())
        self.found.append(first)
        self._expand(frozenset(), first, {frozenset()})

    def _expand(
        self,
        removed: frozenset[Axiom],
        justification: frozenset[Axiom],
        visited: set[frozenset[Axiom]],
    ) -> None:
        for axiom in sorted(justification, key=print_axiom):
            if not self.complete:
                return
            child_removed = removed | {axiom}
            if child_removed in visited:
                continue
            visited.add(child_removed)
            self.explored += 1
            if self.explored > self.node_budget:
                self.complete = False
                return
            if not self.checker.entails(self.expr, self.ind, child_removed):
                continue
            reused = next(
                (j for j in self.found if not (j & child_removed)), None
            )
            if reused is None:
                reused = _shrink(self.checker, self.module, self.expr, self.ind, child_removed)
                if reused not in self.found:
                    self.found.append(reused)
            self._expand(child_removed, reused, visited)


def enumerate_justifications(
    ontology: Ontology,
    expr: ClassExpression,
    individual: Individual,
    limit: int | None = None,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> JustificationSet:
    """All minimal justifications for ``individual : expr``, smallest first
    (ties by printed axiom list). ``limit`` truncates the sorted output, so
    the head of the list is stable regardless of limit. Raises
    NotEntailedError if the full ontology does not entail the membership."""
    module = _relevance_module(ontology, individual)
    checker = _Checker(module)
    if not checker.entails(expr, individual, frozenset()):
        raise NotEntailedError(
            f"{individual} is not an instance of {print_manchester(expr)}"
        )
    search = _HstSearch(checker, module, expr, individual, node_budget)
    search.run()
    justifications = sorted(
        (Justification(expr, individual, axioms) for axioms in search.found),
        key=Justification._key,
    )
    if limit is not None:
        justifications = justifications[:limit]
    return JustificationSet(tuple(justifications), complete=search.complete)


def justify(
    ontology: Ontology,
    expr: ClassExpression,
    individual: Individual,
    node_budget: int = DEFAULT_NODE_BUDGET,
) -> Justification:
    """One minimum-cardinality justification (ties broken by the sorted
    printed axiom list). Best effort if the enumeration budget is hit."""
    result = enumerate_justifications(
        ontology, expr, individual, node_budget=node_budget
    )
    return result.justifications[0]


def support_individuals(
    justification: Justification, exclude: Individual | None = None
) -> frozenset[Individual]:
    """Individuals occurring in the justification's assertion axioms, minus
    the excluded one (typically the explained graph individual)."""
    excluded = {exclude} if exclude is not None else set()
    out: set[Individual] = set()
    for axiom in justification.axioms:
        if isinstance(axiom, ClassAssertion):
            out.add(axiom.individual)
        elif isinstance(axiom, RoleAssertion):
            out.add(axiom.subject)
            out.add(axiom.object)
        elif isinstance(axiom, BoolAssertion):
            out.add(axiom.individual)
    return frozenset(out - excluded)
