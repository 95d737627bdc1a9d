"""End-to-end glue: from trained model and masks to audited explanations.

The flow wires the other modules together:

1. ``build_corpus`` translates every graph and its masked subgraph into one
   shared ontology (domain vocabulary + full graphs + subgraphs).
2. ``learn_explainer_classes`` runs the class-expression learner against the
   model's predictions, once over full-graph individuals (what the model
   sees) and once over masked-subgraph individuals (what the model looked
   at), producing a pool of named, scored classes.
3. Per graph, ``final_explanation`` collects the pool classes that
   instance-check on it, attaches a minimal justification to each and scores
   how much of that justification's graph-level support survived inside
   the mask (fidelity).
4. ``evaluate`` aggregates rates and fidelities, split by whether the
   model's prediction was right, and ``baseline_pure_ill`` fits a single
   class expression directly on the labels for comparison.

Everything here is deterministic given its inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .gnn import GcnModel, GraphInstance, predict
from .justify import Justification, enumerate_justifications, justify, support_individuals
from .learner import LearnerConfig, LearningProblem, learn
from .mapping import (
    MappingConfig,
    MuMap,
    map_graph,
    map_masked_subgraph,
    mu_inverse,
    subgraph_individuals,
)
from .masks import MaskPair
from .ontology import (
    TOP,
    Atomic,
    ClassExpression,
    EquivalentTo,
    Ontology,
    print_manchester,
)
from .reasoner import get_reasoner

KIND_INPUT_OUTPUT = "input_output"
KIND_IMPORTANCE = "importance"

_KIND_PREFIX = {KIND_INPUT_OUTPUT: "io", KIND_IMPORTANCE: "imp"}

# Justification search budget used on the fidelity path. Entailments with a
# single witness resolve in a handful of nodes; the budget only bites on
# many-witness entailments (one justification per witness), where every
# minimal set is still discovered early and the remaining tree is pruning.
FIDELITY_NODE_BUDGET = 150


@dataclass(frozen=True)
class ExplainerClass:
    """A named, learned class expression describing one predicted category.

    ``input_output`` classes are learned from full-graph individuals,
    ``importance`` classes from masked-subgraph individuals.
    """

    name: str
    kind: str
    category: int
    expr: ClassExpression
    accuracy: float

    def axiom(self) -> EquivalentTo:
        return EquivalentTo(self.name, self.expr)


@dataclass(frozen=True)
class ExplanationEntry:
    explainer: ExplainerClass
    justification: Justification
    fidelity: float | None


@dataclass(frozen=True)
class Explanation:
    individual: str
    category: int
    entries: tuple[ExplanationEntry, ...]

    @property
    def is_empty(self) -> bool:
        return not self.entries

    def entailed_names(self) -> tuple[str, ...]:
        return tuple(entry.explainer.name for entry in self.entries)

    def render(self) -> str:
        lines = [f"graph {self.individual}", f"predicted category: {self.category}"]
        if self.is_empty:
            lines.append("no explainer classes entailed")
            return "\n".join(lines)
        for entry in self.entries:
            ec = entry.explainer
            lines.append(f"entailed class {ec.name}: {print_manchester(ec.expr)}")
            lines.append(f"  accuracy: {ec.accuracy:.4f}")
            fid = "n/a" if entry.fidelity is None else f"{entry.fidelity:.4f}"
            lines.append(f"  fidelity: {fid}")
            lines.append("  justification:")
            for axiom_line in entry.justification.render().splitlines():
                lines.append(f"    {axiom_line}")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# Corpus construction
# ---------------------------------------------------------------------------


@dataclass
class MappedCorpus:
    """One ontology covering domain vocabulary, all graphs and all masked
    subgraphs, plus the bookkeeping needed to query it per graph."""

    ontology: Ontology
    graph_ontology: Ontology
    mu: MuMap
    eta: dict[int, str]
    eta_sub: dict[int, str]
    subgraph_ids: dict[int, frozenset[str]]


def build_corpus(
    graphs: Sequence[GraphInstance],
    masks: Mapping[int, MaskPair],
    mapping: MappingConfig,
    domain: Ontology,
) -> MappedCorpus:
    graph_axioms = []
    mask_axioms = []
    mu = MuMap({})
    eta: dict[int, str] = {}
    eta_sub: dict[int, str] = {}
    subgraph_ids: dict[int, frozenset[str]] = {}
    for graph in graphs:
        gid = graph.graph_id
        axioms, graph_mu = map_graph(graph, mapping)
        graph_axioms.extend(axioms)
        mu = mu.merge(graph_mu)
        eta[gid] = f"graph_{gid}"
        axioms_sub, sub_mu = map_masked_subgraph(graph, masks[gid], mapping)
        mask_axioms.extend(axioms_sub)
        mu = mu.merge(sub_mu)
        eta_sub[gid] = f"graph_{gid}_sub"
        subgraph_ids[gid] = subgraph_individuals(axioms_sub)
    graph_ontology = domain.merge(Ontology.from_axioms(graph_axioms))
    ontology = graph_ontology.merge(Ontology.from_axioms(mask_axioms))
    return MappedCorpus(ontology, graph_ontology, mu, eta, eta_sub, subgraph_ids)


def predictions_of(model: GcnModel, graphs: Sequence[GraphInstance]) -> dict[int, int]:
    return {graph.graph_id: predict(model, graph) for graph in graphs}


def split_ids(graph_ids: Sequence[int], test_fraction: float, seed: int) -> tuple[list[int], list[int]]:
    """Deterministic shuffled train/test split of graph ids."""
    if not 0.0 < test_fraction < 1.0:
        raise ValueError(f"test fraction outside (0,1): {test_fraction}")
    ids = sorted(graph_ids)
    order = np.random.default_rng(seed).permutation(len(ids))
    shuffled = [ids[i] for i in order]
    cut = max(1, int(round(len(ids) * test_fraction)))
    return sorted(shuffled[cut:]), sorted(shuffled[:cut])


# ---------------------------------------------------------------------------
# Pool learning
# ---------------------------------------------------------------------------


def learn_explainer_classes(
    ontology: Ontology,
    predictions: Mapping[int, int],
    category: int,
    kind: str,
    eta: Mapping[int, str],
    eta_sub: Mapping[int, str] | None = None,
    config: LearnerConfig | None = None,
    pool_cap: int = 5,
) -> list[ExplainerClass]:
    """Learn class expressions separating graphs the model assigned to
    ``category`` from the rest, over full graphs (input_output) or masked
    subgraphs (importance). Survivors of the accuracy cutoff are named and
    returned best first. ``pool_cap`` keeps the pool small; every pooled
    class costs one entailment check per graph downstream, plus a
    justification when it fires."""
    if kind not in _KIND_PREFIX:
        raise ValueError(f"unknown explainer kind {kind!r}")
    if category not in set(predictions.values()):
        raise ValueError(f"category {category} absent from predictions")
    if kind == KIND_IMPORTANCE:
        if eta_sub is None:
            raise ValueError("importance learning needs masked-subgraph individuals")
        individuals = eta_sub
    else:
        individuals = eta
    positives = frozenset(individuals[g] for g, c in predictions.items() if c == category)
    negatives = frozenset(individuals[g] for g, c in predictions.items() if c != category)
    if not negatives:
        raise ValueError("degenerate split: every graph got the same predicted category")
    problem = LearningProblem(ontology, positives, negatives)
    outcome = learn(problem, config or LearnerConfig())
    prefix = _KIND_PREFIX[kind]
    return [
        ExplainerClass(f"{prefix}_{category}_{k}", kind, category, cand.expr, cand.accuracy)
        for k, cand in enumerate(outcome.candidates[:pool_cap], start=1)
    ]


def pool_axioms(pool: Sequence[ExplainerClass]) -> list[EquivalentTo]:
    return [ec.axiom() for ec in pool]


def inject_pool(ontology: Ontology, pool: Sequence[ExplainerClass]) -> Ontology:
    """Ontology with one definitional axiom per explainer class, so that
    entailments of the named classes carry the defining axiom in their
    justifications."""
    return ontology.merge(Ontology.from_axioms(pool_axioms(pool)))


def _query_expr(ontology: Ontology, ec: ExplainerClass) -> ClassExpression:
    if ec.name in ontology.definitions:
        return Atomic(ec.name)
    return ec.expr


# ---------------------------------------------------------------------------
# Entailment, fidelity, explanation
# ---------------------------------------------------------------------------


def entail_classes(
    ontology: Ontology,
    pool: Sequence[ExplainerClass],
    individual: str,
    category: int,
) -> tuple[ExplainerClass, ...]:
    """Pool classes of the graph's predicted category that hold on the
    graph individual, sorted by name. May be empty or plural."""
    reasoner = get_reasoner(ontology)
    entailed = [
        ec
        for ec in pool
        if ec.category == category and reasoner.check(_query_expr(ontology, ec), individual)
    ]
    return tuple(sorted(entailed, key=lambda ec: ec.name))


def entailment_frequency(
    ontology: Ontology, explainer: ExplainerClass, individuals: frozenset[str] | set[str]
) -> float:
    """Fraction of the given individuals on which the class holds."""
    if not individuals:
        raise ValueError("entailment frequency over an empty individual set")
    reasoner = get_reasoner(ontology)
    expr = _query_expr(ontology, explainer)
    hits = sum(1 for ind in sorted(individuals) if reasoner.check(expr, ind))
    return hits / len(individuals)


def fidelity(
    ontology: Ontology,
    explainer: ExplainerClass,
    individual: str,
    mu: MuMap,
    subgraph: frozenset[str],
    tie_mode: str = "deterministic",
    node_budget: int = FIDELITY_NODE_BUDGET,
) -> float | None:
    """Share of the justification's graph-level support (edge and feature
    individuals, structures expanded through mu) that the mask kept.

    None when the support set is empty (purely terminological entailment);
    raises NotEntailedError when the class does not hold on the individual.
    """
    expr = _query_expr(ontology, explainer)
    if tie_mode == "max":
        result = enumerate_justifications(ontology, expr, individual, node_budget=node_budget)
        ties = [
            j
            for j in result.justifications
            if len(j.axioms) == len(result.justifications[0].axioms)
        ]
        scores = [_fidelity_of(j, individual, mu, subgraph) for j in ties]
        defined = [s for s in scores if s is not None]
        return max(defined) if defined else None
    justification = justify(ontology, expr, individual, node_budget=node_budget)
    return _fidelity_of(justification, individual, mu, subgraph)


def _fidelity_of(
    justification: Justification, individual: str, mu: MuMap, subgraph: frozenset[str]
) -> float | None:
    support = support_individuals(justification, exclude=individual)
    expanded = mu_inverse(mu, support)
    if not expanded:
        return None
    return len(expanded & subgraph) / len(expanded)


def final_explanation(
    ontology: Ontology,
    pool: Sequence[ExplainerClass],
    individual: str,
    category: int,
    mu: MuMap,
    subgraph: frozenset[str],
    tie_mode: str = "deterministic",
    node_budget: int = FIDELITY_NODE_BUDGET,
) -> Explanation:
    """All entailed pool classes on the graph, each with its minimal
    justification and fidelity."""
    entries = []
    for ec in entail_classes(ontology, pool, individual, category):
        expr = _query_expr(ontology, ec)
        justification = justify(ontology, expr, individual, node_budget=node_budget)
        fid = (
            fidelity(ontology, ec, individual, mu, subgraph, tie_mode, node_budget)
            if tie_mode == "max"
            else _fidelity_of(justification, individual, mu, subgraph)
        )
        entries.append(ExplanationEntry(ec, justification, fid))
    return Explanation(individual, category, tuple(entries))


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ClassReportRow:
    name: str
    kind: str
    category: int
    accuracy: float
    entailment_rate: float | None
    fidelity_mean: float | None
    fidelity_std: float | None
    defined_count: int
    undefined_count: int


@dataclass(frozen=True)
class PartitionRow:
    """TP/FP fidelity aggregates for one predicted category (None = all).

    Averages are reported both per entailment (every entailed class of
    every graph weighs equally) and per graph (each graph's mean weighs
    equally). Only entailments grounded in edge evidence enter them: a
    justification citing nothing beyond node-feature individuals survives
    almost any mask, so its fidelity is near-constant and would drown the
    alignment signal these rows exist to expose."""

    category: int | None
    tp_count: int
    fp_count: int
    tp_fidelity_by_entailment: float | None
    fp_fidelity_by_entailment: float | None
    tp_fidelity_by_graph: float | None
    fp_fidelity_by_graph: float | None


@dataclass(frozen=True)
class InstanceRecord:
    """One explained graph: entailments are (class name, fidelity,
    edge-grounded) triples, the flag marking justifications whose support
    cites edge or structure individuals rather than features alone."""

    graph_id: int
    prediction: int
    label: int
    entailments: tuple[tuple[str, float | None, bool], ...]


@dataclass(frozen=True)
class EvaluationReport:
    class_rows: tuple[ClassReportRow, ...]
    partitions: tuple[PartitionRow, ...]
    correlation: float | None
    records: tuple[InstanceRecord, ...]

    def render(self) -> str:
        def fmt(x: float | None) -> str:
            return "n/a" if x is None else f"{x:.4f}"

        lines = ["explainer classes"]
        lines.append(
            "name\tkind\tcategory\taccuracy\tentailment_rate\tfidelity_mean"
            "\tfidelity_std\tdefined\tundefined"
        )
        for row in self.class_rows:
            lines.append(
                f"{row.name}\t{row.kind}\t{row.category}\t{row.accuracy:.4f}"
                f"\t{fmt(row.entailment_rate)}\t{fmt(row.fidelity_mean)}"
                f"\t{fmt(row.fidelity_std)}\t{row.defined_count}\t{row.undefined_count}"
            )
        lines.append("")
        lines.append("prediction partitions")
        lines.append(
            "category\ttp\tfp\ttp_fid_by_entailment\tfp_fid_by_entailment"
            "\ttp_fid_by_graph\tfp_fid_by_graph"
        )
        for row in self.partitions:
            cat = "all" if row.category is None else str(row.category)
            lines.append(
                f"{cat}\t{row.tp_count}\t{row.fp_count}"
                f"\t{fmt(row.tp_fidelity_by_entailment)}\t{fmt(row.fp_fidelity_by_entailment)}"
                f"\t{fmt(row.tp_fidelity_by_graph)}\t{fmt(row.fp_fidelity_by_graph)}"
            )
        lines.append("")
        lines.append(f"accuracy-fidelity correlation: {fmt(self.correlation)}")
        return "\n".join(lines)


def _mean(values: list[float]) -> float | None:
    return sum(values) / len(values) if values else None


def explain_all(
    ontology: Ontology,
    pool: Sequence[ExplainerClass],
    mu: MuMap,
    eta: Mapping[int, str],
    subgraph_ids: Mapping[int, frozenset[str]],
    predictions: Mapping[int, int],
    tie_mode: str = "deterministic",
    node_budget: int = FIDELITY_NODE_BUDGET,
) -> dict[int, Explanation]:
    return {
        gid: final_explanation(
            ontology, pool, eta[gid], predictions[gid], mu,
            subgraph_ids[gid], tie_mode, node_budget,
        )
        for gid in sorted(eta)
    }


def evaluate(
    explanations: Mapping[int, Explanation],
    labels: Mapping[int, int],
    pool: Sequence[ExplainerClass],
) -> EvaluationReport:
    """Entailment rates, fidelity statistics and TP/FP fidelity partitions,
    reduced from per-graph explanations. Aggregates are plain reductions of
    the returned per-instance records."""
    records: list[InstanceRecord] = []
    for gid in sorted(explanations):
        explanation = explanations[gid]
        scored = []
        for entry in explanation.entries:
            support = support_individuals(
                entry.justification, exclude=explanation.individual
            )
            grounded = any(
                ind.startswith(("edge_", "structure_")) for ind in support
            )
            scored.append((entry.explainer.name, entry.fidelity, grounded))
        records.append(
            InstanceRecord(gid, explanation.category, labels[gid], tuple(scored))
        )

    class_rows = []
    for ec in sorted(pool, key=lambda e: e.name):
        cohort = [r for r in records if r.prediction == ec.category]
        hits = [r for r in cohort if any(name == ec.name for name, _, _ in r.entailments)]
        rate = len(hits) / len(cohort) if cohort else None
        values = [
            fid
            for r in hits
            for name, fid, _ in r.entailments
            if name == ec.name and fid is not None
        ]
        undefined = sum(
            1 for r in hits for name, fid, _ in r.entailments if name == ec.name and fid is None
        )
        mean = _mean(values)
        std = float(np.std(values)) if values else None
        class_rows.append(
            ClassReportRow(
                ec.name, ec.kind, ec.category, ec.accuracy, rate, mean, std,
                len(values), undefined,
            )
        )

    def partition(category: int | None) -> PartitionRow:
        rows = records if category is None else [r for r in records if r.prediction == category]
        tp = [r for r in rows if r.prediction == r.label]
        fp = [r for r in rows if r.prediction != r.label]

        def by_entailment(group: list[InstanceRecord]) -> float | None:
            return _mean(
                [
                    fid
                    for r in group
                    for _, fid, grounded in r.entailments
                    if grounded and fid is not None
                ]
            )

        def by_graph(group: list[InstanceRecord]) -> float | None:
            per_graph = []
            for r in group:
                defined = [
                    fid for _, fid, grounded in r.entailments if grounded and fid is not None
                ]
                if defined:
                    per_graph.append(sum(defined) / len(defined))
            return _mean(per_graph)

        return PartitionRow(
            category, len(tp), len(fp),
            by_entailment(tp), by_entailment(fp), by_graph(tp), by_graph(fp),
        )

    categories = sorted({r.prediction for r in records})
    partitions = tuple([partition(c) for c in categories] + [partition(None)])

    points = [
        (row.accuracy, row.fidelity_mean)
        for row in class_rows
        if row.fidelity_mean is not None
    ]
    correlation = None
    if len(points) >= 2:
        xs = np.array([p[0] for p in points])
        ys = np.array([p[1] for p in points])
        if xs.std() > 0 and ys.std() > 0:
            correlation = float(np.corrcoef(xs, ys)[0, 1])

    return EvaluationReport(tuple(class_rows), partitions, correlation, tuple(records))


# ---------------------------------------------------------------------------
# Baseline: class-expression learning straight on the labels
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BaselineResult:
    expr: ClassExpression
    rendered: str
    train_accuracy: float
    test_accuracy: float


def baseline_pure_ill(
    ontology: Ontology,
    labels: Mapping[int, int],
    eta: Mapping[int, str],
    train_ids: Sequence[int],
    test_ids: Sequence[int],
    config: LearnerConfig | None = None,
    positive_category: int = 1,
) -> BaselineResult:
    """Single class expression learned from ground-truth labels over the
    mask-free ontology; its top-1 candidate acts as the classifier and is
    scored on the held-out split."""
    if not train_ids or not test_ids:
        raise ValueError("baseline needs non-empty train and test id lists")
    positives = frozenset(eta[g] for g in train_ids if labels[g] == positive_category)
    negatives = frozenset(eta[g] for g in train_ids if labels[g] != positive_category)
    if not positives or not negatives:
        raise ValueError("baseline training labels are degenerate")
    problem = LearningProblem(ontology, positives, negatives)
    outcome = learn(problem, config or LearnerConfig())
    if outcome.candidates:
        classifier = outcome.candidates[0].expr
    else:
        classifier = TOP
    extent = get_reasoner(ontology).extension(classifier)

    def accuracy(ids: Sequence[int]) -> float:
        correct = 0
        for gid in ids:
            predicted = positive_category if eta[gid] in extent else 1 - positive_category
            correct += int(predicted == labels[gid])
        return correct / len(ids)

    return BaselineResult(
        classifier, print_manchester(classifier), accuracy(list(train_ids)), accuracy(list(test_ids))
    )
