"""Closed-world instance checking against an independent naive evaluator."""

import numpy as np
import pytest

from ontoexplain.ontology import Atomic, Some, Value, loads_ontology, parse_manchester
from ontoexplain.reasoner import UnknownNameError, get_reasoner, instance_check, retrieval

from oracles import brute_check, brute_membership, random_expression, random_ontology


BASE = loads_ontology(
    """
    SubClassOf(Dog, Mammal)
    SubClassOf(Mammal, Animal)
    Type(rex, Dog)
    Type(tweety, Bird)
    SubClassOf(Bird, Animal)
    Role(owns, alice, rex)
    Role(owns, bob, tweety)
    Value(vaccinated, rex, true)
    Value(vaccinated, tweety, false)
    EquivalentTo(DogOwner, "owns some Dog")
    EquivalentTo(PetOwner, "owns some Animal")
    """
)


def test_subclass_chain():
    assert instance_check(BASE, Atomic("Dog"), "rex")
    assert instance_check(BASE, Atomic("Mammal"), "rex")
    assert instance_check(BASE, Atomic("Animal"), "rex")
    assert not instance_check(BASE, Atomic("Dog"), "tweety")


def test_existential_and_definitions():
    assert instance_check(BASE, Some("owns", Atomic("Dog")), "alice")
    assert not instance_check(BASE, Some("owns", Atomic("Dog")), "bob")
    assert instance_check(BASE, Atomic("DogOwner"), "alice")
    assert instance_check(BASE, Atomic("PetOwner"), "bob")
    assert not instance_check(BASE, Atomic("DogOwner"), "rex")


def test_boolean_values_are_exact():
    assert instance_check(BASE, Value("vaccinated", True), "rex")
    assert not instance_check(BASE, Value("vaccinated", False), "rex")
    assert instance_check(BASE, Value("vaccinated", False), "tweety")


def test_closed_world_negative():
    # nothing asserts alice owns a vaccinated animal's owner, so false
    assert not instance_check(BASE, Some("owns", Atomic("Bird")), "alice")


def test_retrieval_sorted():
    assert retrieval(BASE, Atomic("Animal")) == ["rex", "tweety"]
    assert retrieval(BASE, Some("owns", Atomic("Animal"))) == ["alice", "bob"]
    assert retrieval(BASE, parse_manchester("owns some (Dog or Bird)")) == ["alice", "bob"]


def test_unknown_names_raise():
    with pytest.raises(UnknownNameError):
        instance_check(BASE, Atomic("Ghost"), "rex")
    with pytest.raises(UnknownNameError):
        instance_check(BASE, Atomic("Dog"), "nobody")
    with pytest.raises(UnknownNameError):
        instance_check(BASE, Some("eats", Atomic("Dog")), "rex")
    with pytest.raises(UnknownNameError):
        instance_check(BASE, Value("happy", True), "rex")


def test_equivalence_to_atomic_runs_both_ways():
    onto = loads_ontology(
        """
        EquivalentTo(Alias, "Real")
        Type(a, Alias)
        Type(b, Real)
        SubClassOf(Real, Wide)
        """
    )
    assert instance_check(onto, Atomic("Real"), "a")
    assert instance_check(onto, Atomic("Alias"), "b")
    assert instance_check(onto, Atomic("Wide"), "a")


def test_cyclic_definitions_default_false():
    onto = loads_ontology(
        """
        EquivalentTo(Even, "next some Odd")
        EquivalentTo(Odd, "next some Even")
        Role(next, a, b)
        Role(next, b, a)
        """
    )
    # no base case anywhere, so the least fixpoint leaves both empty
    assert not instance_check(onto, Atomic("Even"), "a")
    assert not instance_check(onto, Atomic("Odd"), "b")
    assert retrieval(onto, Atomic("Even")) == []


def test_recursive_definition_with_base_case():
    onto = loads_ontology(
        """
        EquivalentTo(Reaches, "Target or next some Reaches")
        Type(c, Target)
        Role(next, a, b)
        Role(next, b, c)
        DeclareIndividual(d)
        """
    )
    assert retrieval(onto, Atomic("Reaches")) == ["a", "b", "c"]
    assert not instance_check(onto, Atomic("Reaches"), "d")


def test_asserted_members_of_defined_class_count():
    onto = loads_ontology(
        """
        EquivalentTo(Owner, "owns some Thing")
        SubClassOf(Owner, Person)
        Type(claimed, Owner)
        Role(owns, real, thing)
        """
    )
    assert instance_check(onto, Atomic("Owner"), "claimed")
    assert instance_check(onto, Atomic("Person"), "claimed")
    assert instance_check(onto, Atomic("Person"), "real")


def test_extension_matches_per_individual_checks():
    reasoner = get_reasoner(BASE)
    for text in ("Animal", "DogOwner", "owns some (Dog or Bird)", "vaccinated value true"):
        expr = parse_manchester(text)
        extent = reasoner.extension(expr)
        for ind in sorted(BASE.signature.individuals):
            assert (ind in extent) == reasoner.check(expr, ind)


def test_random_agreement_with_naive_evaluator():
    rng = np.random.default_rng(7)
    checks = 0
    while checks < 300:
        onto = random_ontology(rng)
        reasoner = get_reasoner(onto)
        individuals = sorted(onto.signature.individuals)
        member = brute_membership(onto)
        for name in sorted(onto.signature.classes):
            assert set(retrieval(onto, Atomic(name))) == member.get(name, set())
        for _ in range(10):
            expr = random_expression(rng, depth=3)
            ind = individuals[rng.integers(0, len(individuals))]
            assert reasoner.check(expr, ind) == brute_check(onto, expr, ind), (
                f"disagreement on {expr} for {ind}"
            )
            checks += 1


def test_reasoner_cache_is_keyed_on_ontology():
    first = get_reasoner(BASE)
    assert get_reasoner(BASE) is first
