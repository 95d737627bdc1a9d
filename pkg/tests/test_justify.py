"""Justification minimality, exhaustiveness and support extraction.

The oracle enumerates every subset of the axiom set with the naive
evaluator, so agreement means the divide-and-conquer shrinking and the
hitting-set search return exactly the subset-minimal entailing sets.
"""

from itertools import combinations

import numpy as np
import pytest

from ontoexplain.justify import (
    NotEntailedError,
    enumerate_justifications,
    justify,
    support_individuals,
)
from ontoexplain.ontology import (
    Atomic,
    Ontology,
    Some,
    loads_ontology,
    parse_manchester,
    print_axiom,
)

from oracles import brute_check, random_expression, random_ontology


def minimal_entailing_subsets(onto, expr, individual):
    """All subset-minimal axiom sets entailing the membership, by checking
    every subset of the ontology with the naive evaluator."""
    axioms = sorted(onto.axioms, key=print_axiom)
    declared = onto.signature  # keep every name known in each subset
    entailing = []
    for size in range(len(axioms) + 1):
        for combo in combinations(axioms, size):
            chosen = frozenset(combo)
            if any(prior <= chosen for prior in entailing):
                continue
            sub = Ontology.from_axioms(chosen, declared)
            if brute_check(sub, expr, individual):
                entailing.append(chosen)
    return entailing


CHAIN = loads_ontology(
    """
    Type(rex, Dog)
    SubClassOf(Dog, Mammal)
    SubClassOf(Mammal, Animal)
    Role(owns, alice, rex)
    EquivalentTo(AnimalOwner, "owns some Animal")
    Type(rex, Animal)
    """
)


def test_single_justification_through_chain():
    result = enumerate_justifications(CHAIN, Some("owns", Atomic("Mammal")), "alice")
    assert result.complete
    assert len(result.justifications) == 1
    rendered = result.justifications[0].render()
    assert rendered == (
        "Role(owns, alice, rex)\n"
        "SubClassOf(Dog, Mammal)\n"
        "Type(rex, Dog)"
    )


def test_two_justifications_ordered_smallest_first():
    # rex is an Animal both directly and through the subclass chain
    result = enumerate_justifications(CHAIN, Atomic("AnimalOwner"), "alice")
    assert result.complete
    sizes = [len(j.axioms) for j in result.justifications]
    assert sizes == [3, 5]
    assert justify(CHAIN, Atomic("AnimalOwner"), "alice") == result.justifications[0]


def test_justification_entails_and_is_minimal():
    expr = Atomic("AnimalOwner")
    for justification in enumerate_justifications(CHAIN, expr, "alice").justifications:
        axioms = justification.axioms
        sub = Ontology.from_axioms(axioms, CHAIN.signature)
        assert brute_check(sub, expr, "alice")
        for size in range(len(axioms)):
            for combo in combinations(sorted(axioms, key=print_axiom), size):
                weaker = Ontology.from_axioms(frozenset(combo), CHAIN.signature)
                assert not brute_check(weaker, expr, "alice")


def test_not_entailed_raises():
    with pytest.raises(NotEntailedError):
        justify(CHAIN, Atomic("Dog"), "alice")


def test_limit_truncates_stable_head():
    result = enumerate_justifications(CHAIN, Atomic("AnimalOwner"), "alice", limit=1)
    full = enumerate_justifications(CHAIN, Atomic("AnimalOwner"), "alice")
    assert result.justifications == full.justifications[:1]


def test_node_budget_marks_incomplete():
    lines = ["EquivalentTo(Hub, \"link some Spoke\")"]
    for i in range(8):
        lines.append(f"Role(link, hub, s{i})")
        lines.append(f"Type(s{i}, Spoke)")
    onto = loads_ontology("\n".join(lines))
    full = enumerate_justifications(onto, Atomic("Hub"), "hub")
    assert full.complete and len(full.justifications) == 8
    cut = enumerate_justifications(onto, Atomic("Hub"), "hub", node_budget=3)
    assert not cut.complete
    assert 0 < len(cut.justifications) <= 8
    found = {j.axioms for j in cut.justifications}
    assert found <= {j.axioms for j in full.justifications}


def test_support_individuals():
    justification = justify(CHAIN, Atomic("AnimalOwner"), "alice")
    assert support_individuals(justification) == {"alice", "rex"}
    assert support_individuals(justification, exclude="alice") == {"rex"}


def test_support_ignores_terminological_axioms():
    justification = justify(CHAIN, Some("owns", Atomic("Mammal")), "alice")
    # SubClassOf contributes no individuals
    assert support_individuals(justification, exclude="alice") == {"rex"}


def test_random_justifications_match_exhaustive_enumeration():
    rng = np.random.default_rng(11)
    done = 0
    while done < 60:
        onto = random_ontology(rng, max_axioms=9, max_individuals=6)
        individuals = sorted(onto.signature.individuals)
        expr = random_expression(rng, depth=2)
        ind = individuals[rng.integers(0, len(individuals))]
        if not brute_check(onto, expr, ind):
            continue
        oracle = {frozenset(s) for s in minimal_entailing_subsets(onto, expr, ind)}
        result = enumerate_justifications(onto, expr, ind)
        assert result.complete
        got = {j.axioms for j in result.justifications}
        assert got == oracle, f"expr={expr} ind={ind}"
        assert len(result.justifications[0].axioms) == min(len(s) for s in oracle)
        done += 1
    assert done == 60
