"""Expression model, Manchester syntax, axioms and the ontology file format."""

import pytest
from hypothesis import given, settings, strategies as st

from ontoexplain.ontology import (
    And,
    Atomic,
    BoolAssertion,
    ClassAssertion,
    ConflictingDefinitionError,
    EquivalentTo,
    ManchesterParseError,
    Ontology,
    OntologyFileError,
    Or,
    RoleAssertion,
    Signature,
    Some,
    SubClassOf,
    Top,
    TOP,
    UnknownTokenError,
    Value,
    canonical,
    expression_length,
    expression_names,
    load_ontology,
    loads_ontology,
    parse_axiom_line,
    parse_manchester,
    print_axiom,
    print_manchester,
    save_ontology,
)
from ontoexplain.ontology import dumps_ontology, merge_ontologies


names = st.sampled_from(["A", "B", "C_1", "Ring_size_5", "hasPart", "charged"])

expressions = st.recursive(
    st.one_of(
        st.just(TOP),
        names.map(Atomic),
        st.tuples(names, st.booleans()).map(lambda t: Value(*t)),
    ),
    lambda inner: st.one_of(
        st.tuples(names, inner).map(lambda t: Some(*t)),
        st.lists(inner, min_size=2, max_size=3).map(lambda cs: And(tuple(cs))),
        st.lists(inner, min_size=2, max_size=3).map(lambda cs: Or(tuple(cs))),
    ),
    max_leaves=12,
)


@given(expressions)
@settings(max_examples=300)
def test_print_parse_round_trip(expr):
    assert parse_manchester(print_manchester(expr)) == canonical(expr)


@given(expressions)
@settings(max_examples=200)
def test_canonical_idempotent(expr):
    assert canonical(canonical(expr)) == canonical(expr)


@given(expressions)
@settings(max_examples=200)
def test_canonical_preserves_printed_round_trip(expr):
    # canonical output prints to something that parses back to itself
    normal = canonical(expr)
    assert parse_manchester(print_manchester(normal)) == normal


def test_canonical_flattens_and_sorts():
    expr = And((Atomic("B"), And((Atomic("A"), Atomic("B")))))
    assert canonical(expr) == And((Atomic("A"), Atomic("B")))
    expr = Or((Or((Atomic("C"), Atomic("A"))), Atomic("A")))
    assert canonical(expr) == Or((Atomic("A"), Atomic("C")))


def test_canonical_collapses_singletons():
    assert canonical(And((Atomic("A"), Atomic("A")))) == Atomic("A")
    assert canonical(Or((TOP, TOP))) == TOP


def test_printing_precedence():
    expr = And((Or((Atomic("A"), Atomic("B"))), Atomic("C")))
    assert print_manchester(expr) == "(A or B) and C"
    expr = Some("hasPart", And((Atomic("A"), Atomic("B"))))
    assert print_manchester(expr) == "hasPart some (A and B)"
    expr = Some("hasPart", Atomic("A"))
    assert print_manchester(expr) == "hasPart some A"
    assert print_manchester(Value("charged", True)) == "charged value true"
    assert print_manchester(TOP) == "Thing"


def test_parse_nested():
    expr = parse_manchester("A and hasPart some (B or C) and q value false")
    assert expr == And(
        (
            Atomic("A"),
            Some("hasPart", Or((Atomic("B"), Atomic("C")))),
            Value("q", False),
        )
    )


def test_parse_some_binds_tighter_than_and():
    expr = parse_manchester("hasPart some A and B")
    assert expr == And((Atomic("B"), Some("hasPart", Atomic("A"))))


def test_parse_errors():
    with pytest.raises(ManchesterParseError):
        parse_manchester("A and")
    with pytest.raises(ManchesterParseError):
        parse_manchester("(A or B")
    with pytest.raises(ManchesterParseError):
        parse_manchester("A B")
    with pytest.raises(ManchesterParseError):
        parse_manchester(")")
    with pytest.raises(ManchesterParseError):
        parse_manchester("p value maybe")
    with pytest.raises(ManchesterParseError):
        parse_manchester("and and")
    with pytest.raises(UnknownTokenError):
        parse_manchester("A % B")


def test_parse_error_reports_byte_offset():
    try:
        parse_manchester("Abc ?")
    except ManchesterParseError as exc:
        assert exc.offset == 4
    else:
        pytest.fail("expected a parse error")


def test_expression_length():
    assert expression_length(TOP) == 1
    assert expression_length(Atomic("A")) == 1
    assert expression_length(Some("r", Atomic("A"))) == 2
    assert expression_length(And((Atomic("A"), Atomic("B"), Atomic("C")))) == 5
    assert expression_length(Or((Atomic("A"), Some("r", Atomic("B"))))) == 4


def test_expression_names():
    expr = parse_manchester("A and hasPart some (B or q value true)")
    classes, roles, bools = expression_names(expr)
    assert classes == {"A", "B"}
    assert roles == {"hasPart"}
    assert bools == {"q"}


# ---------------------------------------------------------------------------
# Axioms and the file format
# ---------------------------------------------------------------------------

AXIOM_CASES = [
    (SubClassOf("A", "B"), "SubClassOf(A, B)"),
    (
        EquivalentTo("N", Some("hasPart", Atomic("A"))),
        'EquivalentTo(N, "hasPart some A")',
    ),
    (ClassAssertion("A", "x1"), "Type(x1, A)"),
    (RoleAssertion("hasPart", "x1", "x2"), "Role(hasPart, x1, x2)"),
    (BoolAssertion("charged", "x1", True), "Value(charged, x1, true)"),
    (BoolAssertion("charged", "x1", False), "Value(charged, x1, false)"),
]


@pytest.mark.parametrize("axiom,expected", AXIOM_CASES)
def test_print_axiom(axiom, expected):
    assert print_axiom(axiom) == expected


@pytest.mark.parametrize("axiom,expected", AXIOM_CASES)
def test_parse_axiom_line_inverts_print(axiom, expected):
    kind, parsed = parse_axiom_line(expected)
    assert kind == "axiom"
    assert parsed == axiom


def test_parse_axiom_line_declarations():
    assert parse_axiom_line("DeclareClass(A)") == (
        "declare",
        Signature(classes=frozenset({"A"})),
    )
    assert parse_axiom_line("DeclareRole(r)") == ("declare", Signature(roles=frozenset({"r"})))
    assert parse_axiom_line("DeclareBool(p)") == ("declare", Signature(bools=frozenset({"p"})))
    assert parse_axiom_line("DeclareIndividual(x)") == (
        "declare",
        Signature(individuals=frozenset({"x"})),
    )


@pytest.mark.parametrize(
    "line",
    [
        "Nope(A, B)",
        "SubClassOf(A)",
        "SubClassOf(A, B, C)",
        "Type(x1, 2bad)",
        "Value(p, x1, yes)",
        "EquivalentTo(N, hasPart some A)",
        "EquivalentTo(N, \"hasPart some\")",
        "garbage",
    ],
)
def test_parse_axiom_line_rejects(line):
    with pytest.raises(OntologyFileError):
        parse_axiom_line(line)


def test_loads_ontology_and_signature():
    onto = loads_ontology(
        """
        # comment
        SubClassOf(A, B)
        Type(x1, A)
        Role(r, x1, x2)   # trailing comment
        Value(p, x2, true)
        EquivalentTo(N, "r some B")
        DeclareClass(Unused)
        DeclareIndividual(lonely)
        """
    )
    assert len(onto) == 5
    sig = onto.signature
    assert {"A", "B", "N", "Unused"} <= sig.classes
    assert sig.roles == {"r"}
    assert sig.bools == {"p"}
    assert sig.individuals == {"x1", "x2", "lonely"}
    assert onto.definitions == {"N": Some("r", Atomic("B"))}


def test_dumps_loads_round_trip():
    onto = loads_ontology(
        """
        SubClassOf(A, B)
        Type(x1, A)
        Role(r, x1, x2)
        Value(p, x2, false)
        EquivalentTo(N, "A or r some B")
        DeclareClass(Spare)
        DeclareIndividual(lonely)
        """
    )
    again = loads_ontology(dumps_ontology(onto))
    assert again.axioms == onto.axioms
    assert again.signature == onto.signature


def test_dumps_ontology_is_sorted_and_stable():
    text = "Type(x2, B)\nType(x1, A)\nSubClassOf(A, B)\n"
    onto = loads_ontology(text)
    dumped = dumps_ontology(onto)
    assert dumped == "SubClassOf(A, B)\nType(x1, A)\nType(x2, B)\n"
    assert dumps_ontology(loads_ontology(dumped)) == dumped


def test_save_load_file(tmp_path):
    onto = loads_ontology("SubClassOf(A, B)\nType(x1, A)\n")
    path = tmp_path / "small.ont"
    save_ontology(onto, path)
    assert load_ontology(path).axioms == onto.axioms


def test_duplicate_equivalent_to_rejected_in_file():
    with pytest.raises(OntologyFileError):
        loads_ontology('EquivalentTo(N, "A")\nEquivalentTo(N, "B")\n')


def test_conflicting_definitions_rejected_in_constructor():
    with pytest.raises(ConflictingDefinitionError):
        Ontology.from_axioms(
            [EquivalentTo("N", Atomic("A")), EquivalentTo("N", Atomic("B"))]
        )
    # identical definitions collapse under set semantics
    onto = Ontology.from_axioms([EquivalentTo("N", Atomic("A"))] * 2)
    assert len(onto) == 1


def test_merge_is_idempotent_and_commutative():
    left = loads_ontology("SubClassOf(A, B)\nDeclareClass(L)\n")
    right = loads_ontology("Type(x1, A)\nDeclareClass(R)\n")
    merged = left.merge(right)
    assert merged.axioms == left.axioms | right.axioms
    assert merged.signature == right.merge(left).signature
    assert merged.merge(merged).axioms == merged.axioms
    assert merge_ontologies(left, right, merged).axioms == merged.axioms


def test_loads_ontology_reports_line_numbers():
    try:
        loads_ontology("SubClassOf(A, B)\nbad line\n")
    except OntologyFileError as exc:
        assert exc.line == 2
    else:
        pytest.fail("expected a file error")


def test_str_views():
    assert str(parse_manchester("A and B")) == "A and B"
    assert str(SubClassOf("A", "B")) == "SubClassOf(A, B)"
    assert isinstance(TOP, Top)
