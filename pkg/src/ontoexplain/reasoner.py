"""Closed-world reasoning over materialized ontologies.

Instance checking interprets the ABox as complete: an individual belongs to
an atomic class exactly when some asserted (or derivable through a class
definition) membership places it there, role successors are only the
asserted ones, and boolean properties hold only with their asserted value.

Definitions (EquivalentTo) may be mutually recursive; membership is the
least fixpoint, so purely cyclic derivations yield False.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

from .ontology import (
    And,
    Atomic,
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
    canonical,
    expression_names,
    print_manchester,
)


class UnknownNameError(OntologyError):
    """An individual name not present in the ontology signature."""


@dataclass(frozen=True)
class ClassClosure:
    """Reflexive-transitive subclass relation between named classes.

    Edges come from SubClassOf axioms and, bidirectionally, from
    EquivalentTo axioms whose body is a single named class.
    """

    supers: dict[str, frozenset[str]]

    @classmethod
    def of(cls, ontology: Ontology) -> "ClassClosure":
        edges: dict[str, set[str]] = {}
        for axiom in ontology.axioms:
            if isinstance(axiom, SubClassOf):
                edges.setdefault(axiom.sub, set()).add(axiom.sup)
            elif isinstance(axiom, EquivalentTo) and isinstance(axiom.expr, Atomic):
                edges.setdefault(axiom.name, set()).add(axiom.expr.name)
                edges.setdefault(axiom.expr.name, set()).add(axiom.name)
        supers: dict[str, frozenset[str]] = {}
        for name in ontology.signature.classes:
            reached = {name}
            frontier = [name]
            while frontier:
                current = frontier.pop()
                for parent in edges.get(current, ()):
                    if parent not in reached:
                        reached.add(parent)
                        frontier.append(parent)
            supers[name] = frozenset(reached)
        return cls(supers)

    def superclasses(self, name: str) -> frozenset[str]:
        """All classes the named class is subsumed by, including itself."""
        return self.supers.get(name, frozenset({name}))

    def subclasses(self, name: str) -> frozenset[str]:
        return frozenset(c for c, ups in self.supers.items() if name in ups)

    def is_subclass(self, sub: str, sup: str) -> bool:
        return sup in self.superclasses(sub)


@dataclass
class Reasoner:
    """Indexed view of one ontology with memoized extension sets."""

    ontology: Ontology
    closure: ClassClosure = field(init=False)
    _classes_of: dict[Individual, tuple[str, ...]] = field(init=False)
    _asserted: dict[str, set[Individual]] = field(init=False)
    _role_objects: dict[tuple[str, Individual], tuple[Individual, ...]] = field(init=False)
    _role_pairs: dict[str, tuple[tuple[Individual, tuple[Individual, ...]], ...]] = field(
        init=False
    )
    _bool_facts: set[tuple[str, Individual, bool]] = field(init=False)
    _defined_subs: dict[str, tuple[str, ...]] = field(init=False)
    _defined_ext: dict[str, frozenset[Individual]] | None = field(init=False, default=None)
    _ext_memo: dict[str, frozenset[Individual]] = field(init=False, default_factory=dict)

    def __post_init__(self):
        onto = self.ontology
        self.closure = ClassClosure.of(onto)
        classes_of: dict[Individual, set[str]] = {}
        asserted: dict[str, set[Individual]] = {}
        role_objects: dict[tuple[str, Individual], list[Individual]] = {}
        self._bool_facts = set()
        for axiom in onto.axioms:
            if isinstance(axiom, ClassAssertion):
                classes_of.setdefault(axiom.individual, set()).add(axiom.cls)
                asserted.setdefault(axiom.cls, set()).add(axiom.individual)
            elif isinstance(axiom, RoleAssertion):
                role_objects.setdefault((axiom.role, axiom.subject), []).append(axiom.object)
            elif isinstance(axiom, BoolAssertion):
                self._bool_facts.add((axiom.prop, axiom.individual, axiom.value))
        self._classes_of = {ind: tuple(sorted(cs)) for ind, cs in classes_of.items()}
        self._asserted = asserted
        self._role_objects = {k: tuple(sorted(v)) for k, v in role_objects.items()}
        by_role: dict[str, list[tuple[Individual, tuple[Individual, ...]]]] = {}
        for (role, subject), objects in self._role_objects.items():
            by_role.setdefault(role, []).append((subject, objects))
        self._role_pairs = {role: tuple(pairs) for role, pairs in by_role.items()}
        defined_subs: dict[str, list[str]] = {}
        for name in onto.definitions:
            for sup in self.closure.superclasses(name):
                defined_subs.setdefault(sup, []).append(name)
        self._defined_subs = {k: tuple(sorted(v)) for k, v in defined_subs.items()}

    @property
    def individuals(self) -> frozenset[Individual]:
        return self.ontology.signature.individuals

    def _validate_names(self, expr: ClassExpression) -> None:
        classes, roles, bools = expression_names(expr)
        sig = self.ontology.signature
        for kind, used, known in (
            ("class", classes, sig.classes),
            ("role", roles, sig.roles),
            ("boolean property", bools, sig.bools),
        ):
            missing = used - known
            if missing:
                raise UnknownNameError(f"unknown {kind} name {sorted(missing)[0]!r}")

    # -- per-individual checking ------------------------------------------

    def check(self, expr: ClassExpression, individual: Individual) -> bool:
        self._validate_names(expr)
        if individual not in self.individuals:
            raise UnknownNameError(f"unknown individual {individual!r}")
        return self._check(expr, individual, frozenset())

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
            for cls in self._classes_of.get(ind, ()):
                if target in self.closure.superclasses(cls):
                    return True
            for name in self._defined_subs.get(target, ()):
                key = (name, ind)
                if key in in_progress:
                    continue
                body = self.ontology.definitions[name]
                if self._check(body, ind, in_progress | {key}):
                    return True
            return False
        if isinstance(expr, And):
            return all(self._check(c, ind, in_progress) for c in expr.children)
        if isinstance(expr, Or):
            return any(self._check(c, ind, in_progress) for c in expr.children)
        if isinstance(expr, Some):
            for obj in self._role_objects.get((expr.role, ind), ()):
                if self._check(expr.filler, obj, in_progress):
                    return True
            return False
        if isinstance(expr, Value):
            return (expr.prop, ind, expr.value) in self._bool_facts
        raise TypeError(f"not a class expression: {expr!r}")

    # -- extension sets ----------------------------------------------------

    def _asserted_extent(self, name: str) -> frozenset[Individual]:
        out: set[Individual] = set()
        for cls in self.closure.subclasses(name):
            out |= self._asserted.get(cls, set())
        return frozenset(out)

    def _eval(
        self, expr: ClassExpression, defined_ext: dict[str, frozenset[Individual]]
    ) -> frozenset[Individual]:
        if isinstance(expr, Top):
            return self.individuals
        if isinstance(expr, Atomic):
            out = set(self._asserted_extent(expr.name))
            for name in self._defined_subs.get(expr.name, ()):
                out |= defined_ext.get(name, frozenset())
            return frozenset(out)
        if isinstance(expr, And):
            sets = [self._eval(c, defined_ext) for c in expr.children]
            return frozenset.intersection(*sets) if sets else self.individuals
        if isinstance(expr, Or):
            sets = [self._eval(c, defined_ext) for c in expr.children]
            return frozenset.union(*sets) if sets else frozenset()
        if isinstance(expr, Some):
            filler = self._eval(expr.filler, defined_ext)
            out = set()
            for subject, objects in self._role_pairs.get(expr.role, ()):
                if any(o in filler for o in objects):
                    out.add(subject)
            return frozenset(out)
        if isinstance(expr, Value):
            return frozenset(
                ind
                for (prop, ind, value) in self._bool_facts
                if prop == expr.prop and value == expr.value
            )
        raise TypeError(f"not a class expression: {expr!r}")

    def _fixed_definitions(self) -> dict[str, frozenset[Individual]]:
        """Least-fixpoint extents of all defined class names."""
        if self._defined_ext is None:
            current = {name: frozenset() for name in self.ontology.definitions}
            while True:
                updated = {
                    name: self._eval(body, current)
                    for name, body in self.ontology.definitions.items()
                }
                if updated == current:
                    break
                current = updated
            self._defined_ext = current
        return self._defined_ext

    def extension(self, expr: ClassExpression) -> frozenset[Individual]:
        """All individuals satisfying the expression. Memoized per reasoner."""
        self._validate_names(expr)
        expr = canonical(expr)
        key = print_manchester(expr)
        cached = self._ext_memo.get(key)
        if cached is None:
            cached = self._eval(expr, self._fixed_definitions())
            self._ext_memo[key] = cached
        return cached


@lru_cache(maxsize=64)
def get_reasoner(ontology: Ontology) -> Reasoner:
    """Reasoner for the ontology, cached so repeated queries share indexes."""
    return Reasoner(ontology)


def instance_check(ontology: Ontology, expr: ClassExpression, individual: Individual) -> bool:
    """Does the individual satisfy the class expression under closed-world
    semantics? Raises UnknownNameError for individuals outside the signature."""
    return get_reasoner(ontology).check(expr, individual)


def retrieval(ontology: Ontology, expr: ClassExpression) -> list[Individual]:
    """All individuals satisfying the expression, sorted by name."""
    return sorted(get_reasoner(ontology).extension(expr))
