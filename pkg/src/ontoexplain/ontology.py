"""Description-logic data model: class expressions, axioms and ontologies.

The expression language is a small positive fragment (no negation, no
cardinalities): atomic classes, conjunction, disjunction, existential role
restrictions and boolean property values, written in Manchester-style
syntax, e.g. ``Compound and hasStructure some Nitrogen_Dioxide``.

Ontologies are immutable sets of axioms plus a signature. A line-oriented
text serialization is provided (one axiom per line, ``#`` comments).
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Iterator

# Individuals are plain string identifiers, e.g. "graph_100", "feature_100_5".
Individual = str

_NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_KEYWORDS = frozenset({"and", "or", "some", "value", "true", "false", "Thing"})


class OntologyError(Exception):
    """Base class for ontology-layer errors."""


class ManchesterParseError(OntologyError):
    """Syntax error in a Manchester-style expression, with byte offset."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class UnknownTokenError(ManchesterParseError):
    """Character sequence that is not a valid token."""


class OntologyFileError(OntologyError):
    """Malformed ontology file, with 1-based line number."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line


class ConflictingDefinitionError(OntologyError):
    """Two EquivalentTo axioms define the same class name differently."""


# ---------------------------------------------------------------------------
# Class expressions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClassExpression:
    """Base class of all expression nodes. Instances are immutable."""

    def __str__(self) -> str:
        return print_manchester(self)


@dataclass(frozen=True)
class Top(ClassExpression):
    """The universal class, written ``Thing``."""


@dataclass(frozen=True)
class Atomic(ClassExpression):
    name: str


@dataclass(frozen=True)
class And(ClassExpression):
    children: tuple[ClassExpression, ...]


@dataclass(frozen=True)
class Or(ClassExpression):
    children: tuple[ClassExpression, ...]


@dataclass(frozen=True)
class Some(ClassExpression):
    role: str
    filler: ClassExpression


@dataclass(frozen=True)
class Value(ClassExpression):
    prop: str
    value: bool


TOP = Top()


def canonical(expr: ClassExpression) -> ClassExpression:
    """Normalize an expression: flatten nested And/And and Or/Or, drop
    duplicate children, sort children by printed form, collapse one-child
    And/Or to the child itself. Idempotent."""
    if isinstance(expr, (Top, Atomic, Value)):
        return expr
    if isinstance(expr, Some):
        return Some(expr.role, canonical(expr.filler))
    if isinstance(expr, (And, Or)):
        kind = type(expr)
        flat: list[ClassExpression] = []
        for child in expr.children:
            child = canonical(child)
            if isinstance(child, kind):
                flat.extend(child.children)
            else:
                flat.append(child)
        unique = sorted(set(flat), key=print_manchester)
        if len(unique) == 1:
            return unique[0]
        return kind(tuple(unique))
    raise TypeError(f"not a class expression: {expr!r}")


def expression_length(expr: ClassExpression) -> int:
    """Symbol count used as a complexity measure: leaves count 1, ``some``
    counts 1 plus its filler, n-ary connectives count n-1 plus children."""
    if isinstance(expr, (Top, Atomic, Value)):
        return 1
    if isinstance(expr, Some):
        return 1 + expression_length(expr.filler)
    if isinstance(expr, (And, Or)):
        return sum(expression_length(c) for c in expr.children) + len(expr.children) - 1
    raise TypeError(f"not a class expression: {expr!r}")


def expression_names(expr: ClassExpression) -> tuple[set[str], set[str], set[str]]:
    """Collect (class names, role names, boolean property names) used in expr."""
    classes: set[str] = set()
    roles: set[str] = set()
    bools: set[str] = set()

    def walk(e: ClassExpression) -> None:
        if isinstance(e, Atomic):
            classes.add(e.name)
        elif isinstance(e, Some):
            roles.add(e.role)
            walk(e.filler)
        elif isinstance(e, Value):
            bools.add(e.prop)
        elif isinstance(e, (And, Or)):
            for c in e.children:
                walk(c)

    walk(expr)
    return classes, roles, bools


def print_manchester(expr: ClassExpression) -> str:
    """Render an expression in Manchester-style syntax.

    Deterministic; ``or`` children are parenthesized inside ``and``, and
    compound fillers of ``some`` are parenthesized, so the output re-parses
    to the canonical form of the input.
    """
    if isinstance(expr, Top):
        return "Thing"
    if isinstance(expr, Atomic):
        return expr.name
    if isinstance(expr, Value):
        return f"{expr.prop} value {'true' if expr.value else 'false'}"
    if isinstance(expr, Some):
        filler = print_manchester(expr.filler)
        if isinstance(expr.filler, (And, Or)):
            filler = f"({filler})"
        return f"{expr.role} some {filler}"
    if isinstance(expr, And):
        parts = []
        for child in expr.children:
            text = print_manchester(child)
            if isinstance(child, (Or, And)):
                text = f"({text})"
            parts.append(text)
        return " and ".join(parts)
    if isinstance(expr, Or):
        parts = []
        for child in expr.children:
            text = print_manchester(child)
            if isinstance(child, Or):
                text = f"({text})"
            parts.append(text)
        return " or ".join(parts)
    raise TypeError(f"not a class expression: {expr!r}")


def _tokenize(text: str) -> Iterator[tuple[str, str, int]]:
    """Yield (kind, text, char offset) tokens; kind is 'name', '(' or ')'."""
    pos = 0
    n = len(text)
    while pos < n:
        ch = text[pos]
        if ch.isspace():
            pos += 1
            continue
        if ch in "()":
            yield ch, ch, pos
            pos += 1
            continue
        match = _NAME_RE.match(text, pos)
        if match is None:
            raise UnknownTokenError(
                f"unknown token {text[pos]!r}", len(text[:pos].encode("utf-8"))
            )
        yield "name", match.group(0), pos
        pos = match.end()


class _Parser:
    """Recursive-descent parser for the Manchester-style grammar:

    Expr := Conj ('or' Conj)*
    Conj := Prim ('and' Prim)*
    Prim := 'Thing' | '(' Expr ')' | Name ['some' Prim | 'value' Bool]
    """

    def __init__(self, text: str):
        self.text = text
        self.tokens = list(_tokenize(text))
        self.pos = 0

    def _byte_offset(self, char_offset: int) -> int:
        return len(self.text[:char_offset].encode("utf-8"))

    def _error(self, message: str) -> ManchesterParseError:
        if self.pos < len(self.tokens):
            offset = self._byte_offset(self.tokens[self.pos][2])
        else:
            offset = len(self.text.encode("utf-8"))
        return ManchesterParseError(message, offset)

    def peek(self) -> tuple[str, str, int] | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> tuple[str, str, int]:
        token = self.peek()
        if token is None:
            raise self._error("unexpected end of input")
        self.pos += 1
        return token

    def parse(self) -> ClassExpression:
        expr = self.expr()
        if self.peek() is not None:
            raise self._error(f"unexpected token {self.peek()[1]!r}")
        return expr

    def expr(self) -> ClassExpression:
        parts = [self.conj()]
        while self._at_keyword("or"):
            self.take()
            parts.append(self.conj())
        return parts[0] if len(parts) == 1 else Or(tuple(parts))

    def conj(self) -> ClassExpression:
        parts = [self.prim()]
        while self._at_keyword("and"):
            self.take()
            parts.append(self.prim())
        return parts[0] if len(parts) == 1 else And(tuple(parts))

    def prim(self) -> ClassExpression:
        kind, text, _ = self.take()
        if kind == "(":
            inner = self.expr()
            closing = self.peek()
            if closing is None or closing[0] != ")":
                raise self._error("expected ')'")
            self.take()
            return inner
        if kind == ")":
            raise self._error("unexpected ')'")
        if text == "Thing":
            return TOP
        if text in _KEYWORDS:
            raise self._error(f"unexpected keyword {text!r}")
        if self._at_keyword("some"):
            self.take()
            return Some(text, self.prim())
        if self._at_keyword("value"):
            self.take()
            token = self.take()
            if token[1] not in ("true", "false"):
                raise self._error("expected 'true' or 'false' after 'value'")
            return Value(text, token[1] == "true")
        return Atomic(text)

    def _at_keyword(self, word: str) -> bool:
        token = self.peek()
        return token is not None and token[0] == "name" and token[1] == word


def parse_manchester(text: str) -> ClassExpression:
    """Parse a Manchester-style expression into its canonical form.

    Raises ManchesterParseError (with byte offset) on malformed input and
    UnknownTokenError on characters outside the token alphabet.
    """
    return canonical(_Parser(text).parse())


# ---------------------------------------------------------------------------
# Axioms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Axiom:
    """Base class of all axiom kinds. Instances are immutable."""

    def __str__(self) -> str:
        return print_axiom(self)


@dataclass(frozen=True)
class SubClassOf(Axiom):
    sub: str
    sup: str


@dataclass(frozen=True)
class EquivalentTo(Axiom):
    name: str
    expr: ClassExpression


@dataclass(frozen=True)
class ClassAssertion(Axiom):
    cls: str
    individual: Individual


@dataclass(frozen=True)
class RoleAssertion(Axiom):
    role: str
    subject: Individual
    object: Individual


@dataclass(frozen=True)
class BoolAssertion(Axiom):
    prop: str
    individual: Individual
    value: bool


def print_axiom(axiom: Axiom) -> str:
    """Render an axiom as one line of the ontology file format."""
    if isinstance(axiom, SubClassOf):
        return f"SubClassOf({axiom.sub}, {axiom.sup})"
    if isinstance(axiom, EquivalentTo):
        return f'EquivalentTo({axiom.name}, "{print_manchester(axiom.expr)}")'
    if isinstance(axiom, ClassAssertion):
        return f"Type({axiom.individual}, {axiom.cls})"
    if isinstance(axiom, RoleAssertion):
        return f"Role({axiom.role}, {axiom.subject}, {axiom.object})"
    if isinstance(axiom, BoolAssertion):
        flag = "true" if axiom.value else "false"
        return f"Value({axiom.prop}, {axiom.individual}, {flag})"
    raise TypeError(f"not an axiom: {axiom!r}")


# ---------------------------------------------------------------------------
# Ontology
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Signature:
    classes: frozenset[str] = frozenset()
    roles: frozenset[str] = frozenset()
    bools: frozenset[str] = frozenset()
    individuals: frozenset[Individual] = frozenset()

    def union(self, other: "Signature") -> "Signature":
        return Signature(
            self.classes | other.classes,
            self.roles | other.roles,
            self.bools | other.bools,
            self.individuals | other.individuals,
        )


EMPTY_SIGNATURE = Signature()


def _axiom_signature(axiom: Axiom) -> Signature:
    if isinstance(axiom, SubClassOf):
        return Signature(classes=frozenset({axiom.sub, axiom.sup}))
    if isinstance(axiom, EquivalentTo):
        classes, roles, bools = expression_names(axiom.expr)
        return Signature(frozenset(classes | {axiom.name}), frozenset(roles), frozenset(bools))
    if isinstance(axiom, ClassAssertion):
        return Signature(
            classes=frozenset({axiom.cls}), individuals=frozenset({axiom.individual})
        )
    if isinstance(axiom, RoleAssertion):
        return Signature(
            roles=frozenset({axiom.role}),
            individuals=frozenset({axiom.subject, axiom.object}),
        )
    if isinstance(axiom, BoolAssertion):
        return Signature(
            bools=frozenset({axiom.prop}), individuals=frozenset({axiom.individual})
        )
    raise TypeError(f"not an axiom: {axiom!r}")


@dataclass(frozen=True)
class Ontology:
    """An immutable set of axioms plus explicitly declared names.

    The signature is exactly the names occurring in axioms plus the
    declarations. At most one EquivalentTo definition per class name is
    allowed. Safe to share across threads once constructed.
    """

    axioms: frozenset[Axiom] = frozenset()
    declared: Signature = EMPTY_SIGNATURE

    def __post_init__(self):
        seen: dict[str, EquivalentTo] = {}
        for axiom in self.axioms:
            if isinstance(axiom, EquivalentTo):
                previous = seen.get(axiom.name)
                if previous is not None and previous != axiom:
                    raise ConflictingDefinitionError(
                        f"multiple EquivalentTo definitions for {axiom.name!r}"
                    )
                seen[axiom.name] = axiom

    @classmethod
    def from_axioms(
        cls, axioms: Iterable[Axiom], declared: Signature = EMPTY_SIGNATURE
    ) -> "Ontology":
        return cls(frozenset(axioms), declared)

    @cached_property
    def signature(self) -> Signature:
        sig = self.declared
        for axiom in self.axioms:
            sig = sig.union(_axiom_signature(axiom))
        return sig

    @cached_property
    def definitions(self) -> dict[str, ClassExpression]:
        """Map class name -> defining expression from EquivalentTo axioms."""
        return {a.name: a.expr for a in self.axioms if isinstance(a, EquivalentTo)}

    def merge(self, other: "Ontology") -> "Ontology":
        """Union of axioms and declarations; commutative and idempotent."""
        return Ontology(self.axioms | other.axioms, self.declared.union(other.declared))

    def declare(self, extra: Signature) -> "Ontology":
        return Ontology(self.axioms, self.declared.union(extra))

    def __len__(self) -> int:
        return len(self.axioms)


def add_axiom(ontology: Ontology, axiom: Axiom) -> Ontology:
    """Return an ontology with the axiom added (set semantics); the
    signature is extended by the names the axiom mentions."""
    if axiom in ontology.axioms:
        return ontology
    return Ontology(ontology.axioms | {axiom}, ontology.declared)


def merge_ontologies(*ontologies: Ontology) -> Ontology:
    merged = Ontology()
    for onto in ontologies:
        merged = merged.merge(onto)
    return merged


# ---------------------------------------------------------------------------
# File format
# ---------------------------------------------------------------------------
#
# One axiom per line; '#' starts a comment. Recognized lines:
#   SubClassOf(A, B)            EquivalentTo(Name, "manchester expr")
#   Type(ind, Class)            Role(role, ind1, ind2)
#   Value(prop, ind, true|false)
#   DeclareClass(A)  DeclareRole(r)  DeclareBool(p)  DeclareIndividual(a)

_LINE_RE = re.compile(r"^([A-Za-z]+)\((.*)\)$")


def _split_args(body: str) -> list[str]:
    args, current, in_quotes = [], [], False
    for ch in body:
        if ch == '"':
            in_quotes = not in_quotes
            current.append(ch)
        elif ch == "," and not in_quotes:
            args.append("".join(current).strip())
            current = []
        else:
            current.append(ch)
    args.append("".join(current).strip())
    return args


def _check_name(name: str, line: int) -> str:
    if not _NAME_RE.fullmatch(name):
        raise OntologyFileError(f"invalid name {name!r}", line)
    return name


def parse_axiom_line(line: str, lineno: int = 0) -> tuple[str, object]:
    """Parse one non-comment line; returns ('axiom', Axiom) or
    ('declare', Signature)."""
    match = _LINE_RE.match(line.strip())
    if match is None:
        raise OntologyFileError(f"unrecognized line {line.strip()!r}", lineno)
    head, body = match.group(1), match.group(2)
    args = _split_args(body)

    def arity(n: int) -> list[str]:
        if len(args) != n:
            raise OntologyFileError(f"{head} expects {n} arguments, got {len(args)}", lineno)
        return args

    if head == "SubClassOf":
        sub, sup = arity(2)
        return "axiom", SubClassOf(_check_name(sub, lineno), _check_name(sup, lineno))
    if head == "EquivalentTo":
        name, quoted = arity(2)
        if not (quoted.startswith('"') and quoted.endswith('"') and len(quoted) >= 2):
            raise OntologyFileError("EquivalentTo expression must be double-quoted", lineno)
        try:
            expr = parse_manchester(quoted[1:-1])
        except ManchesterParseError as exc:
            raise OntologyFileError(f"bad expression: {exc}", lineno) from exc
        return "axiom", EquivalentTo(_check_name(name, lineno), expr)
    if head == "Type":
        ind, cls = arity(2)
        return "axiom", ClassAssertion(_check_name(cls, lineno), _check_name(ind, lineno))
    if head == "Role":
        role, subject, obj = arity(3)
        return "axiom", RoleAssertion(
            _check_name(role, lineno), _check_name(subject, lineno), _check_name(obj, lineno)
        )
    if head == "Value":
        prop, ind, flag = arity(3)
        if flag not in ("true", "false"):
            raise OntologyFileError(f"Value flag must be true or false, got {flag!r}", lineno)
        return "axiom", BoolAssertion(
            _check_name(prop, lineno), _check_name(ind, lineno), flag == "true"
        )
    if head == "DeclareClass":
        (name,) = arity(1)
        return "declare", Signature(classes=frozenset({_check_name(name, lineno)}))
    if head == "DeclareRole":
        (name,) = arity(1)
        return "declare", Signature(roles=frozenset({_check_name(name, lineno)}))
    if head == "DeclareBool":
        (name,) = arity(1)
        return "declare", Signature(bools=frozenset({_check_name(name, lineno)}))
    if head == "DeclareIndividual":
        (name,) = arity(1)
        return "declare", Signature(individuals=frozenset({_check_name(name, lineno)}))
    raise OntologyFileError(f"unknown axiom kind {head!r}", lineno)


def loads_ontology(text: str) -> Ontology:
    axioms: list[Axiom] = []
    declared = EMPTY_SIGNATURE
    names: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        kind, value = parse_axiom_line(line, lineno)
        if kind == "axiom":
            if isinstance(value, EquivalentTo):
                previous = names.get(value.name)
                if previous is not None:
                    raise OntologyFileError(
                        f"duplicate EquivalentTo for {value.name!r}"
                        f" (first defined on line {previous})",
                        lineno,
                    )
                names[value.name] = lineno
            axioms.append(value)
        else:
            declared = declared.union(value)
    return Ontology.from_axioms(axioms, declared)


def load_ontology(path) -> Ontology:
    """Load an ontology from the line-oriented text format."""
    with open(path, "r", encoding="utf-8") as handle:
        return loads_ontology(handle.read())


def dumps_ontology(ontology: Ontology) -> str:
    """Serialize deterministically: declarations for names not occurring in
    any axiom, then axioms sorted by their printed form."""
    used = Signature()
    for axiom in ontology.axioms:
        used = used.union(_axiom_signature(axiom))
    lines = []
    sig = ontology.signature
    for name in sorted(sig.classes - used.classes):
        lines.append(f"DeclareClass({name})")
    for name in sorted(sig.roles - used.roles):
        lines.append(f"DeclareRole({name})")
    for name in sorted(sig.bools - used.bools):
        lines.append(f"DeclareBool({name})")
    for name in sorted(sig.individuals - used.individuals):
        lines.append(f"DeclareIndividual({name})")
    lines.extend(sorted(print_axiom(a) for a in ontology.axioms))
    return "\n".join(lines) + "\n"


def save_ontology(ontology: Ontology, path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(dumps_ontology(ontology))
