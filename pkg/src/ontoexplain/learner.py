"""Class-expression learning by top-down refinement over positive and
negative example individuals.

Search starts at Thing and repeatedly specializes beam members: Thing opens
into the most general class names, existential restrictions and boolean
values; named classes descend the subclass hierarchy; conjuncts are added
and refined in place; fillers of existential restrictions are refined
recursively. Scoring is predictive accuracy via retrieval with memoized
extension sets, so repeated subexpressions cost one evaluation.

Disjunction enters only as a final step: unions of two surviving beam
members are scored alongside the rest.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

from .ontology import (
    And,
    Atomic,
    ClassExpression,
    Individual,
    Ontology,
    Or,
    Some,
    SubClassOf,
    Top,
    TOP,
    Value,
    canonical,
    expression_length,
    print_manchester,
)
from .reasoner import get_reasoner


@dataclass(frozen=True)
class LearningProblem:
    ontology: Ontology
    positives: frozenset[Individual]
    negatives: frozenset[Individual]

    def validate(self) -> None:
        if not self.positives or not self.negatives:
            raise ValueError("positive and negative example sets must be non-empty")
        if self.positives & self.negatives:
            raise ValueError("example sets overlap")
        unknown = (self.positives | self.negatives) - self.ontology.signature.individuals
        if unknown:
            raise ValueError(f"examples outside the ontology: {sorted(unknown)[:3]}")


@dataclass(frozen=True)
class Candidate:
    expr: ClassExpression
    accuracy: float
    covered_pos: int
    covered_neg: int

    def sort_key(self) -> tuple:
        return (-self.accuracy, expression_length(self.expr), print_manchester(self.expr))


@dataclass(frozen=True)
class LearnerConfig:
    beam_width: int = 200
    max_depth: int = 3
    max_length: int = 7
    cutoff: float = 0.5
    length_bias: float = 0.01
    max_scored: int = 200_000


@dataclass(frozen=True)
class LearnOutcome:
    """Candidates above the accuracy cutoff, best first; the flag records
    whether the scoring budget ran out (results then best-effort)."""

    candidates: tuple[Candidate, ...]
    budget_exhausted: bool = False


@lru_cache(maxsize=64)
def _hierarchy(ontology: Ontology) -> tuple[tuple[str, ...], dict[str, tuple[str, ...]]]:
    """Most-general class names and the direct-subclass relation, from
    SubClassOf axioms (asserted edges only, no closure)."""
    children: dict[str, set[str]] = {}
    has_parent: set[str] = set()
    for axiom in ontology.axioms:
        if isinstance(axiom, SubClassOf):
            children.setdefault(axiom.sup, set()).add(axiom.sub)
            has_parent.add(axiom.sub)
    roots = tuple(sorted(ontology.signature.classes - has_parent))
    return roots, {k: tuple(sorted(v)) for k, v in children.items()}


def refine(expr: ClassExpression, ontology: Ontology) -> list[ClassExpression]:
    """Downward refinements of a canonical expression, deduplicated,
    canonical, sorted by printed form."""
    roots, children = _hierarchy(ontology)
    sig = ontology.signature
    out: set[ClassExpression] = set()

    def conjuncts(base: ClassExpression) -> None:
        additions: list[ClassExpression] = [Atomic(name) for name in roots]
        additions.extend(Some(role, TOP) for role in sorted(sig.roles))
        for extra in additions:
            out.add(canonical(And((base, extra))))

    if isinstance(expr, Top):
        out.update(Atomic(name) for name in roots)
        out.update(Some(role, TOP) for role in sorted(sig.roles))
        for prop in sorted(sig.bools):
            out.add(Value(prop, True))
            out.add(Value(prop, False))
    elif isinstance(expr, Atomic):
        out.update(Atomic(name) for name in children.get(expr.name, ()))
        conjuncts(expr)
    elif isinstance(expr, Some):
        out.update(Some(expr.role, f) for f in refine(expr.filler, ontology))
        conjuncts(expr)
    elif isinstance(expr, And):
        for i, child in enumerate(expr.children):
            rest = expr.children[:i] + expr.children[i + 1 :]
            for refined in refine(child, ontology):
                out.add(canonical(And(rest + (refined,))))
        conjuncts(expr)
    elif isinstance(expr, (Value, Or)):
        conjuncts(expr)
    else:
        raise TypeError(f"not a class expression: {expr!r}")
    out.discard(canonical(expr) if isinstance(expr, (And, Or)) else expr)
    return sorted(out, key=print_manchester)


def score(expr: ClassExpression, problem: LearningProblem) -> Candidate:
    """Predictive accuracy of an expression on the example sets."""
    extension = get_reasoner(problem.ontology).extension(expr)
    covered_pos = len(extension & problem.positives)
    covered_neg = len(extension & problem.negatives)
    total = len(problem.positives) + len(problem.negatives)
    accuracy = (covered_pos + (len(problem.negatives) - covered_neg)) / total
    return Candidate(canonical(expr), accuracy, covered_pos, covered_neg)


def learn(problem: LearningProblem, config: LearnerConfig = LearnerConfig()) -> LearnOutcome:
    """Beam search for expressions separating the examples; returns every
    distinct candidate whose accuracy exceeds the cutoff, sorted by
    accuracy, then length, then printed form."""
    problem.validate()
    scored: dict[str, Candidate] = {}
    exhausted = False

    def get_scored(expr: ClassExpression) -> Candidate | None:
        nonlocal exhausted
        key = print_manchester(expr)
        hit = scored.get(key)
        if hit is None:
            if len(scored) >= config.max_scored:
                exhausted = True
                return None
            hit = score(expr, problem)
            scored[key] = hit
        return hit

    def beam_key(candidate: Candidate) -> tuple:
        bias = config.length_bias / expression_length(candidate.expr)
        return (-(candidate.accuracy + bias), print_manchester(candidate.expr))

    beam: list[Candidate] = [get_scored(TOP)]
    for _ in range(config.max_depth):
        if exhausted:
            break
        fresh: list[Candidate] = []
        seen: set[str] = set()
        for member in beam:
            for refined in refine(member.expr, problem.ontology):
                if expression_length(refined) > config.max_length:
                    continue
                key = print_manchester(refined)
                if key in seen:
                    continue
                seen.add(key)
                candidate = get_scored(refined)
                if candidate is None:
                    break
                fresh.append(candidate)
            if exhausted:
                break
        merged = {print_manchester(c.expr): c for c in beam + fresh}
        beam = sorted(merged.values(), key=beam_key)[: config.beam_width]

    for i, first in enumerate(beam):
        if exhausted:
            break
        for second in beam[i + 1 :]:
            union = canonical(Or((first.expr, second.expr)))
            if expression_length(union) > config.max_length:
                continue
            if get_scored(union) is None:
                break

    survivors = [c for c in scored.values() if c.accuracy > config.cutoff]
    survivors.sort(key=Candidate.sort_key)
    return LearnOutcome(tuple(survivors), budget_exhausted=exhausted)
