"""Bundled synthetic molecule-style dataset plus file loaders.

Every generated graph is a carbon tree decorated with hydrogens and a
fused 6-carbon ring. Class 1 carries a nitro group (N bonded to two O)
attached directly to a ring carbon. Class 0 graphs carry the same nitro
group attached to a tree carbon away from the ring, or only a nitroso
group (N bonded to one O) on the ring, or no nitrogen at all.

The class signal is therefore a relation between structures (where the
nitro sits), which the bag-of-structures ontology view cannot express but
a message-passing classifier can: exactly the regime where the trained
network knows more than a symbolic learner over the same vocabulary.

Everything is deterministic for a fixed seed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gnn import GraphInstance
from .mapping import MappingConfig, MotifGraph, Ring, StructurePattern
from .ontology import Ontology, loads_ontology

FEATURE_NAMES = ("C", "N", "O", "H")

DOMAIN_LINES = """
# domain vocabulary for the synthetic molecule-style dataset
SubClassOf(Carbon, Atom)
SubClassOf(Nitrogen, Atom)
SubClassOf(Oxygen, Atom)
SubClassOf(Hydrogen, Atom)
SubClassOf(Carbon_6_ring, Ring_size_6)
SubClassOf(Ring_size_6, RingStructure)
SubClassOf(Nitro_group, Nitrogen_group)
SubClassOf(Nitroso_group, Nitrogen_group)
DeclareClass(Compound)
DeclareClass(Bond)
DeclareRole(hasAtom)
DeclareRole(hasBond)
DeclareRole(hasStructure)
"""


def domain_ontology() -> Ontology:
    """Class hierarchy and role declarations the generator maps into."""
    return loads_ontology(DOMAIN_LINES)


def default_structures() -> tuple[tuple[str, StructurePattern], ...]:
    return (
        ("Nitro_group", MotifGraph(("N", "O", "O"), ((0, 1), (0, 2)))),
        ("Nitroso_group", MotifGraph(("N", "O"), ((0, 1),))),
        ("Carbon_6_ring", Ring(6, ("C",) * 6)),
    )


def default_mapping_config() -> MappingConfig:
    return MappingConfig(
        graph_class="Compound",
        edge_class="Bond",
        feature_classes={
            "C": "Carbon",
            "N": "Nitrogen",
            "O": "Oxygen",
            "H": "Hydrogen",
        },
        feature_names=FEATURE_NAMES,
        structures=default_structures(),
    )


@dataclass(frozen=True)
class SyntheticSpec:
    """Generator knobs. Class-0 variant probabilities must sum to 1.

    Class 1 is always a nitro group on a ring carbon. The class-0 variants
    are chosen so that no single substructure gives the label away: the
    same nitro group appears away from the ring (detached), and ring-borne
    nitrogens appear with one oxygen (nitroso) or none (bare), so telling
    the classes apart requires both the oxygen count and the attachment
    point.

    Every graph carries exactly ``oxygen_count`` oxygens and each of them
    is tethered to a random tree carbon, whatever the variant. The atom
    histogram, the carbon-oxygen edge count and the oxygen placement are
    then identical in both classes; the only signal left is how many of
    those oxygens additionally bond the nitrogen, which can only be read
    through the nitrogen-oxygen edges themselves.
    """

    num_graphs: int = 200
    tree_size_range: tuple[int, int] = (4, 7)
    hydrogen_prob: float = 0.3
    oxygen_count: int = 4
    detached_prob: float = 0.4
    bare_prob: float = 0.3
    nitroso_prob: float = 0.2
    plain_prob: float = 0.1
    noise_rate: float = 0.0
    seed: int = 0

    def variant_probs(self) -> tuple[tuple[str, float], ...]:
        return (
            ("detached", self.detached_prob),
            ("bare", self.bare_prob),
            ("nitroso", self.nitroso_prob),
            ("plain", self.plain_prob),
        )

    def validate(self) -> None:
        lo, hi = self.tree_size_range
        if not 1 <= lo <= hi:
            raise ValueError(f"bad tree size range {self.tree_size_range}")
        probs = [p for _, p in self.variant_probs()]
        if any(p < 0 for p in probs) or abs(sum(probs) - 1.0) > 1e-9:
            raise ValueError("class-0 variant probabilities must sum to 1")
        if not 0.0 <= self.noise_rate <= 1.0:
            raise ValueError(f"noise rate outside [0,1]: {self.noise_rate}")
        if not 0.0 <= self.hydrogen_prob <= 1.0:
            raise ValueError(f"hydrogen probability outside [0,1]: {self.hydrogen_prob}")
        if self.oxygen_count < 2:
            raise ValueError("oxygen count must cover a nitro group")
        if self.num_graphs < 2:
            raise ValueError("need at least two graphs")


@dataclass(frozen=True)
class GroundTruth:
    """Per-graph generator record: construction variant, pre-noise label,
    the nitrogen-group edges and the ring nodes."""

    graph_id: int
    variant: str
    true_label: int
    motif_edges: tuple[tuple[int, int], ...]
    ring_nodes: tuple[int, ...]


@dataclass
class SyntheticDataset:
    graphs: list[GraphInstance]
    annotations: list[GroundTruth]
    domain: Ontology
    mapping: MappingConfig
    feature_names: tuple[str, ...] = FEATURE_NAMES


def _build_graph(
    graph_id: int, label: int, variant: str, rng: np.random.Generator, spec: SyntheticSpec
) -> tuple[GraphInstance, GroundTruth]:
    lo, hi = spec.tree_size_range
    tree_n = int(rng.integers(lo, hi + 1))
    edges: list[tuple[int, int]] = []
    kinds: list[str] = ["C"] * tree_n
    for node in range(1, tree_n):
        edges.append((int(rng.integers(0, node)), node))

    ring = list(range(tree_n, tree_n + 6))
    kinds.extend(["C"] * 6)
    for i in range(6):
        edges.append((ring[i], ring[(i + 1) % 6]))
    anchor = int(rng.integers(0, tree_n))
    edges.append((anchor, ring[0]))

    # every oxygen is tethered to a random tree carbon whatever the variant,
    # so neither the atom histogram nor any carbon-oxygen count separates
    # the classes; the variant only decides how many of these oxygens also
    # bond the nitrogen, and that is visible solely through N-O edges
    oxygens: list[int] = []
    for _ in range(spec.oxygen_count):
        oxygen = len(kinds)
        kinds.append("O")
        oxygens.append(oxygen)
        edges.append((int(rng.integers(0, tree_n)), oxygen))

    nitro_counts = {"attached": 2, "detached": 2, "nitroso": 1, "bare": 0, "plain": 0}
    motif_edges: list[tuple[int, int]] = []
    if variant != "plain":
        nitrogen = len(kinds)
        kinds.append("N")
        if variant == "detached":
            tree_adj: dict[int, set[int]] = {i: set() for i in range(tree_n)}
            for u, v in edges:
                if u < tree_n and v < tree_n:
                    tree_adj[u].add(v)
                    tree_adj[v].add(u)
            distance = {anchor: 0}
            frontier = [anchor]
            while frontier:
                current = frontier.pop(0)
                for nxt in tree_adj[current]:
                    if nxt not in distance:
                        distance[nxt] = distance[current] + 1
                        frontier.append(nxt)
            far = [n for n in range(tree_n) if distance[n] >= 2]
            if not far:
                far = [max(range(tree_n), key=lambda n: (distance[n], n))]
            host = int(far[int(rng.integers(0, len(far)))])
        else:
            host = ring[int(rng.integers(0, 6))]
        edges.append((host, nitrogen))
        for oxygen in oxygens[: nitro_counts[variant]]:
            edges.append((nitrogen, oxygen))
            motif_edges.append((nitrogen, oxygen))

    for node in range(tree_n):
        if rng.random() < spec.hydrogen_prob:
            hydrogen = len(kinds)
            kinds.append("H")
            edges.append((node, hydrogen))

    n = len(kinds)
    adjacency = np.zeros((n, n))
    for u, v in edges:
        adjacency[u, v] = 1.0
        adjacency[v, u] = 1.0
    features = np.zeros((n, len(FEATURE_NAMES)))
    for node, kind in enumerate(kinds):
        features[node, FEATURE_NAMES.index(kind)] = 1.0
    graph = GraphInstance(graph_id, adjacency, features, label)
    truth = GroundTruth(
        graph_id=graph_id,
        variant=variant,
        true_label=1 if variant == "attached" else 0,
        motif_edges=tuple(sorted((min(u, v), max(u, v)) for u, v in motif_edges)),
        ring_nodes=tuple(ring),
    )
    return graph, truth


def generate(spec: SyntheticSpec = SyntheticSpec()) -> SyntheticDataset:
    """Build the dataset, its ground-truth annotations, the domain
    ontology and the matching translation config."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    graphs: list[GraphInstance] = []
    annotations: list[GroundTruth] = []
    names = [name for name, _ in spec.variant_probs()]
    thresholds = np.cumsum([p for _, p in spec.variant_probs()])
    for graph_id in range(spec.num_graphs):
        true_label = graph_id % 2
        if true_label == 1:
            variant = "attached"
        else:
            draw = rng.random()
            pick = int(np.searchsorted(thresholds, draw, side="right"))
            variant = names[min(pick, len(names) - 1)]
        stored = true_label
        if spec.noise_rate > 0 and rng.random() < spec.noise_rate:
            stored = 1 - stored
        graph, truth = _build_graph(graph_id, stored, variant, rng, spec)
        graphs.append(graph)
        annotations.append(truth)
    return SyntheticDataset(graphs, annotations, domain_ontology(), default_mapping_config())


# ---------------------------------------------------------------------------
# Dataset file format
# ---------------------------------------------------------------------------
#
# features C N O H
# graph <id> <label>
# node <idx> <feature-name>*        one line per node, names may repeat cols
# edge <u> <v>                      undirected, u != v
# end


class DatasetFormatError(ValueError):
    def __init__(self, message: str, graph_id: int | None = None):
        prefix = f"graph {graph_id}: " if graph_id is not None else ""
        super().__init__(prefix + message)
        self.graph_id = graph_id


@dataclass
class Dataset:
    graphs: list[GraphInstance]
    feature_names: tuple[str, ...]


def dumps_dataset(graphs: list[GraphInstance], feature_names: tuple[str, ...]) -> str:
    lines = ["features " + " ".join(feature_names)]
    for graph in graphs:
        lines.append(f"graph {graph.graph_id} {graph.label}")
        for node in range(graph.num_nodes):
            active = [
                feature_names[dim] for dim in np.nonzero(graph.features[node])[0].tolist()
            ]
            lines.append(f"node {node} " + " ".join(active) if active else f"node {node}")
        for u, v in graph.edges():
            lines.append(f"edge {u} {v}")
        lines.append("end")
    return "\n".join(lines) + "\n"


def save_dataset(graphs: list[GraphInstance], feature_names: tuple[str, ...], path) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(dumps_dataset(graphs, feature_names))


def loads_dataset(text: str) -> Dataset:
    feature_names: tuple[str, ...] | None = None
    graphs: list[GraphInstance] = []
    current: dict | None = None

    def finish() -> None:
        nonlocal current
        record = current
        current = None
        graph_id = record["id"]
        n = len(record["nodes"])
        if n == 0:
            raise DatasetFormatError("graph has no nodes", graph_id)
        if sorted(record["nodes"]) != list(range(n)):
            raise DatasetFormatError("node indices must be 0..n-1", graph_id)
        adjacency = np.zeros((n, n))
        for u, v in record["edges"]:
            if not (0 <= u < n and 0 <= v < n):
                raise DatasetFormatError(f"edge ({u}, {v}) outside node range", graph_id)
            if u == v:
                raise DatasetFormatError(f"self loop on node {u}", graph_id)
            adjacency[u, v] = 1.0
            adjacency[v, u] = 1.0
        features = np.zeros((n, len(feature_names)))
        for node, names in record["features"].items():
            for name in names:
                if name not in feature_names:
                    raise DatasetFormatError(f"unknown feature {name!r}", graph_id)
                features[node, feature_names.index(name)] = 1.0
        graph = GraphInstance(graph_id, adjacency, features, record["label"])
        graph.validate()
        graphs.append(graph)

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "features":
            if feature_names is not None:
                raise DatasetFormatError(f"line {lineno}: duplicate features header")
            feature_names = tuple(parts[1:])
        elif parts[0] == "graph":
            if feature_names is None:
                raise DatasetFormatError(f"line {lineno}: features header required first")
            if current is not None:
                raise DatasetFormatError(f"line {lineno}: graph block not closed")
            if len(parts) != 3:
                raise DatasetFormatError(f"line {lineno}: bad graph header")
            current = {
                "id": int(parts[1]),
                "label": int(parts[2]),
                "nodes": [],
                "features": {},
                "edges": [],
            }
        elif parts[0] == "node":
            if current is None:
                raise DatasetFormatError(f"line {lineno}: node outside graph block")
            idx = int(parts[1])
            current["nodes"].append(idx)
            current["features"][idx] = parts[2:]
        elif parts[0] == "edge":
            if current is None:
                raise DatasetFormatError(f"line {lineno}: edge outside graph block")
            current["edges"].append((int(parts[1]), int(parts[2])))
        elif parts[0] == "end":
            if current is None:
                raise DatasetFormatError(f"line {lineno}: stray end")
            finish()
        else:
            raise DatasetFormatError(f"line {lineno}: unrecognized line {line!r}")
    if current is not None:
        raise DatasetFormatError("unterminated graph block")
    return Dataset(graphs, feature_names or ())


def load_dataset(path) -> Dataset:
    with open(path, "r", encoding="utf-8") as handle:
        return loads_dataset(handle.read())


def dumps_annotations(annotations: list[GroundTruth]) -> str:
    lines = []
    for truth in annotations:
        motif = ",".join(f"{u}-{v}" for u, v in truth.motif_edges) or "-"
        ring = ",".join(str(n) for n in truth.ring_nodes) or "-"
        lines.append(
            f"truth {truth.graph_id} {truth.variant} {truth.true_label} {motif} {ring}"
        )
    return "\n".join(lines) + "\n"


def loads_annotations(text: str) -> list[GroundTruth]:
    out = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        _, graph_id, variant, true_label, motif, ring = line.split()
        motif_edges = tuple(
            tuple(int(x) for x in pair.split("-")) for pair in motif.split(",")
        ) if motif != "-" else ()
        ring_nodes = tuple(int(x) for x in ring.split(",")) if ring != "-" else ()
        out.append(
            GroundTruth(int(graph_id), variant, int(true_label), motif_edges, ring_nodes)
        )
    return out
