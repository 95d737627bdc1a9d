"""Independent reference implementations the tests check the package against.

The membership oracle here is written as naive forward chaining over all
individuals, with none of the indexing or memoization the package uses, so
agreement between the two is meaningful evidence rather than a tautology.
"""

from __future__ import annotations

import numpy as np

from ontoexplain.ontology import (
    And,
    Atomic,
    Axiom,
    BoolAssertion,
    ClassAssertion,
    ClassExpression,
    EquivalentTo,
    Ontology,
    Or,
    RoleAssertion,
    Signature,
    Some,
    SubClassOf,
    Top,
    TOP,
    Value,
)


def brute_membership(ontology: Ontology) -> dict[str, set[str]]:
    """Materialized class membership by round-robin rule application.

    Rules, applied until nothing changes (entailment is monotone, so this
    terminates in the least fixpoint):
      Type(i, C)                  -> i in C
      SubClassOf(A, B), i in A    -> i in B
      EquivalentTo(N, e), e(i)    -> i in N
      EquivalentTo(N, M), i in N  -> i in M        (atomic body only)
    """
    individuals = sorted(ontology.signature.individuals)
    member: dict[str, set[str]] = {name: set() for name in ontology.signature.classes}
    role_pairs: dict[str, list[tuple[str, str]]] = {}
    bool_facts: set[tuple[str, str, bool]] = set()
    for axiom in ontology.axioms:
        if isinstance(axiom, ClassAssertion):
            member.setdefault(axiom.cls, set()).add(axiom.individual)
        elif isinstance(axiom, RoleAssertion):
            role_pairs.setdefault(axiom.role, []).append((axiom.subject, axiom.object))
        elif isinstance(axiom, BoolAssertion):
            bool_facts.add((axiom.prop, axiom.individual, axiom.value))

    def holds(expr: ClassExpression, ind: str) -> bool:
        if isinstance(expr, Top):
            return True
        if isinstance(expr, Atomic):
            return ind in member.get(expr.name, set())
        if isinstance(expr, And):
            return all(holds(c, ind) for c in expr.children)
        if isinstance(expr, Or):
            return any(holds(c, ind) for c in expr.children)
        if isinstance(expr, Some):
            return any(
                subject == ind and holds(expr.filler, obj)
                for subject, obj in role_pairs.get(expr.role, [])
            )
        if isinstance(expr, Value):
            return (expr.prop, ind, expr.value) in bool_facts
        raise TypeError(f"not a class expression: {expr!r}")

    changed = True
    while changed:
        changed = False
        for axiom in ontology.axioms:
            if isinstance(axiom, SubClassOf):
                gained = member.get(axiom.sub, set()) - member.get(axiom.sup, set())
                if gained:
                    member.setdefault(axiom.sup, set()).update(gained)
                    changed = True
            elif isinstance(axiom, EquivalentTo):
                for ind in individuals:
                    if ind not in member.get(axiom.name, set()) and holds(axiom.expr, ind):
                        member.setdefault(axiom.name, set()).add(ind)
                        changed = True
                if isinstance(axiom.expr, Atomic):
                    gained = member.get(axiom.name, set()) - member.get(axiom.expr.name, set())
                    if gained:
                        member.setdefault(axiom.expr.name, set()).update(gained)
                        changed = True

    return member


def brute_check(ontology: Ontology, expr: ClassExpression, individual: str) -> bool:
    member = brute_membership(ontology)
    role_pairs: dict[str, list[tuple[str, str]]] = {}
    bool_facts: set[tuple[str, str, bool]] = set()
    for axiom in ontology.axioms:
        if isinstance(axiom, RoleAssertion):
            role_pairs.setdefault(axiom.role, []).append((axiom.subject, axiom.object))
        elif isinstance(axiom, BoolAssertion):
            bool_facts.add((axiom.prop, axiom.individual, axiom.value))

    def holds(e: ClassExpression, ind: str) -> bool:
        if isinstance(e, Top):
            return True
        if isinstance(e, Atomic):
            return ind in member.get(e.name, set())
        if isinstance(e, And):
            return all(holds(c, ind) for c in e.children)
        if isinstance(e, Or):
            return any(holds(c, ind) for c in e.children)
        if isinstance(e, Some):
            return any(
                subject == ind and holds(e.filler, obj)
                for subject, obj in role_pairs.get(e.role, [])
            )
        if isinstance(e, Value):
            return (e.prop, ind, e.value) in bool_facts
        raise TypeError(f"not a class expression: {e!r}")

    return holds(expr, individual)


# ---------------------------------------------------------------------------
# Random inputs over a small declared universe. Declaring every pool name up
# front keeps expressions well-formed even when an axiom subset no longer
# mentions a name, which the justification tests rely on.
# ---------------------------------------------------------------------------

CLASS_POOL = tuple(f"K{i}" for i in range(6))
ROLE_POOL = ("r0", "r1", "r2")
BOOL_POOL = ("p0", "p1")
IND_POOL = tuple(f"x{i}" for i in range(12))

UNIVERSE = Signature(
    classes=frozenset(CLASS_POOL),
    roles=frozenset(ROLE_POOL),
    bools=frozenset(BOOL_POOL),
    individuals=frozenset(IND_POOL),
)


def random_expression(rng: np.random.Generator, depth: int) -> ClassExpression:
    kinds = ["atomic", "value", "top"]
    if depth > 0:
        kinds += ["and", "or", "some"] * 2
    kind = kinds[rng.integers(0, len(kinds))]
    if kind == "top":
        return TOP
    if kind == "atomic":
        return Atomic(CLASS_POOL[rng.integers(0, len(CLASS_POOL))])
    if kind == "value":
        return Value(BOOL_POOL[rng.integers(0, len(BOOL_POOL))], bool(rng.integers(0, 2)))
    if kind == "some":
        role = ROLE_POOL[rng.integers(0, len(ROLE_POOL))]
        return Some(role, random_expression(rng, depth - 1))
    arity = int(rng.integers(2, 4))
    children = tuple(random_expression(rng, depth - 1) for _ in range(arity))
    return And(children) if kind == "and" else Or(children)


def random_ontology(
    rng: np.random.Generator,
    max_axioms: int = 20,
    max_individuals: int = 12,
    def_depth: int = 2,
) -> Ontology:
    individuals = list(IND_POOL[: max(2, int(rng.integers(2, max_individuals + 1)))])
    count = int(rng.integers(1, max_axioms + 1))
    defined: set[str] = set()
    axioms: list[Axiom] = []

    def pick(pool):
        return pool[rng.integers(0, len(pool))]

    for _ in range(count):
        roll = rng.random()
        if roll < 0.30:
            axioms.append(ClassAssertion(pick(CLASS_POOL), pick(individuals)))
        elif roll < 0.55:
            axioms.append(RoleAssertion(pick(ROLE_POOL), pick(individuals), pick(individuals)))
        elif roll < 0.70:
            axioms.append(
                BoolAssertion(pick(BOOL_POOL), pick(individuals), bool(rng.integers(0, 2)))
            )
        elif roll < 0.85:
            axioms.append(SubClassOf(pick(CLASS_POOL), pick(CLASS_POOL)))
        else:
            free = [name for name in CLASS_POOL if name not in defined]
            if not free:
                continue
            name = pick(free)
            defined.add(name)
            axioms.append(EquivalentTo(name, random_expression(rng, def_depth)))

    declared = UNIVERSE.union(Signature(individuals=frozenset(individuals)))
    return Ontology.from_axioms(axioms, declared)
