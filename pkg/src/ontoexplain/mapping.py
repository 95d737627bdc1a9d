"""Translate graphs (and masked explainer subgraphs) into ontology axioms.

Each graph becomes one individual, each undirected edge, each active
(node, feature) pair and each extracted structure match becomes one more,
connected to the graph by configurable roles and typed by configurable
classes. With one-hot node features this emits exactly

    1 + 2*|edges| + 2*|active features| + 2*|structure matches|

axioms per graph. Structure matches additionally feed a map from the
structure individual to the edge individuals composing it, whose inverse
the fidelity metric uses; lookups fall back to identity for unmapped ids.

Masked-subgraph translation reuses the same machinery restricted to the
binarized mask, with every individual name suffixed ``_sub``. Structure
extraction in the subgraph sees the kept edges but the original node
features; the feature mask only limits which feature individuals are
emitted.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .gnn import GraphInstance
from .masks import MaskPair
from .ontology import (
    Axiom,
    ClassAssertion,
    OntologyError,
    RoleAssertion,
)


class MappingError(OntologyError):
    """Entity without a mapping rule, or a bad pattern definition."""


# ---------------------------------------------------------------------------
# Structure patterns
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MotifGraph:
    """Connected template graph; node constraints are feature names or None
    (wildcard). Matches are non-induced: template edges must exist, extra
    edges in the host graph are fine."""

    node_constraints: tuple[str | None, ...]
    edges: tuple[tuple[int, int], ...]

    def validate(self) -> None:
        n = len(self.node_constraints)
        if n == 0:
            raise MappingError("motif needs at least one node")
        for u, v in self.edges:
            if not (0 <= u < n and 0 <= v < n) or u == v:
                raise MappingError(f"bad motif edge ({u}, {v})")
        seen = {0}
        frontier = [0]
        adjacency = {i: set() for i in range(n)}
        for u, v in self.edges:
            adjacency[u].add(v)
            adjacency[v].add(u)
        while frontier:
            for nxt in adjacency[frontier.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    frontier.append(nxt)
        if len(seen) != n:
            raise MappingError("motif must be connected")


@dataclass(frozen=True)
class Ring:
    """Simple cycle of a fixed size with one feature constraint per
    position (None = wildcard). The aromatic flag additionally requires an
    ``Aromatic`` feature column on every ring node."""

    size: int
    constraints: tuple[str | None, ...]
    aromatic: bool = False

    def validate(self) -> None:
        if not 3 <= self.size <= 8:
            raise MappingError(f"ring size must be within 3..8, got {self.size}")
        if len(self.constraints) != self.size:
            raise MappingError("one constraint per ring position required")


@dataclass(frozen=True)
class FusedRings:
    """A fused system: connected component of rings (size 3..8) sharing
    edges, containing at least min_rings rings."""

    min_rings: int

    def validate(self) -> None:
        if self.min_rings < 1:
            raise MappingError("min_rings must be positive")


StructurePattern = MotifGraph | Ring | FusedRings


@dataclass(frozen=True)
class StructureMatch:
    """One occurrence of a pattern: matched node ids plus the matched edset."""

    nodes: frozenset[int]
    edges: frozenset[tuple[int, int]]

    def sort_key(self) -> tuple:
        return (tuple(sorted(self.nodes)), tuple(sorted(self.edges)))


def _feature_column(name: str, feature_names: tuple[str, ...]) -> int:
    try:
        return feature_names.index(name)
    except ValueError:
        raise MappingError(f"unknown feature name {name!r}") from None


def _constraint_ok(
    graph: GraphInstance, node: int, constraint: str | None, feature_names: tuple[str, ...]
) -> bool:
    if constraint is None:
        return True
    return bool(graph.features[node, _feature_column(constraint, feature_names)])


def _adjacency_sets(graph: GraphInstance) -> list[set[int]]:
    return [set(np.nonzero(row)[0].tolist()) for row in graph.adjacency]


def _match_motif(
    graph: GraphInstance, motif: MotifGraph, feature_names: tuple[str, ...]
) -> list[StructureMatch]:
    motif.validate()
    adj = _adjacency_sets(graph)
    k = len(motif.node_constraints)
    pattern_adj: dict[int, set[int]] = {i: set() for i in range(k)}
    for u, v in motif.edges:
        pattern_adj[u].add(v)
        pattern_adj[v].add(u)
    # visit pattern nodes so each (after the first) touches an earlier one
    order = [0]
    while len(order) < k:
        nxt = min(
            i for i in range(k) if i not in order and pattern_adj[i] & set(order)
        )
        order.append(nxt)

    found: dict[frozenset[int], frozenset[tuple[int, int]]] = {}

    def backtrack(assignment: dict[int, int]) -> None:
        if len(assignment) == k:
            nodes = frozenset(assignment.values())
            edges = frozenset(
                (min(assignment[u], assignment[v]), max(assignment[u], assignment[v]))
                for u, v in motif.edges
            )
            prior = found.get(nodes)
            if prior is None or sorted(edges) < sorted(prior):
                found[nodes] = edges
            return
        p = order[len(assignment)]
        anchors = [q for q in pattern_adj[p] if q in assignment]
        candidates = set(range(graph.num_nodes)) if not anchors else set.intersection(
            *(adj[assignment[q]] for q in anchors)
        )
        for candidate in sorted(candidates):
            if candidate in assignment.values():
                continue
            if not _constraint_ok(graph, candidate, motif.node_constraints[p], feature_names):
                continue
            assignment[p] = candidate
            backtrack(assignment)
            del assignment[p]

    backtrack({})
    return [StructureMatch(nodes, edges) for nodes, edges in found.items()]


def _simple_cycles(adj: list[set[int]], size: int) -> list[tuple[int, ...]]:
    """All simple cycles of exactly the given length, each reported once,
    anchored at its smallest node with the second node below the last."""
    cycles: list[tuple[int, ...]] = []

    def extend(start: int, path: list[int], members: set[int]) -> None:
        last = path[-1]
        if len(path) == size:
            if start in adj[last] and path[1] < path[-1]:
                cycles.append(tuple(path))
            return
        for nxt in sorted(adj[last]):
            if nxt > start and nxt not in members:
                members.add(nxt)
                path.append(nxt)
                extend(start, path, members)
                path.pop()
                members.remove(nxt)

    for start in range(len(adj)):
        extend(start, [start], {start})
    return cycles


def _cycle_edges(cycle: tuple[int, ...]) -> frozenset[tuple[int, int]]:
    k = len(cycle)
    return frozenset(
        (min(cycle[i], cycle[(i + 1) % k]), max(cycle[i], cycle[(i + 1) % k]))
        for i in range(k)
    )


def _match_ring(
    graph: GraphInstance, ring: Ring, feature_names: tuple[str, ...]
) -> list[StructureMatch]:
    ring.validate()
    adj = _adjacency_sets(graph)
    found: dict[frozenset[int], frozenset[tuple[int, int]]] = {}
    for cycle in _simple_cycles(adj, ring.size):
        ok = False
        orientations = [cycle, tuple(reversed(cycle))]
        for oriented in orientations:
            for shift in range(ring.size):
                rotated = oriented[shift:] + oriented[:shift]
                if all(
                    _constraint_ok(graph, rotated[p], ring.constraints[p], feature_names)
                    for p in range(ring.size)
                ):
                    ok = True
                    break
            if ok:
                break
        if ok and ring.aromatic:
            ok = all(
                _constraint_ok(graph, node, "Aromatic", feature_names) for node in cycle
            )
        if ok:
            found.setdefault(frozenset(cycle), _cycle_edges(cycle))
    return [StructureMatch(nodes, edges) for nodes, edges in found.items()]


def _match_fused(graph: GraphInstance, fused: FusedRings) -> list[StructureMatch]:
    fused.validate()
    adj = _adjacency_sets(graph)
    rings: list[frozenset[tuple[int, int]]] = []
    seen_node_sets: set[frozenset[int]] = set()
    for size in range(3, 9):
        for cycle in _simple_cycles(adj, size):
            nodes = frozenset(cycle)
            if nodes not in seen_node_sets:
                seen_node_sets.add(nodes)
                rings.append(_cycle_edges(cycle))
    # group rings sharing an edge into components
    parent = list(range(len(rings)))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(len(rings)):
        for j in range(i + 1, len(rings)):
            if rings[i] & rings[j]:
                parent[find(i)] = find(j)
    groups: dict[int, list[int]] = {}
    for i in range(len(rings)):
        groups.setdefault(find(i), []).append(i)
    matches = []
    for members in groups.values():
        if len(members) >= fused.min_rings:
            edges = frozenset().union(*(rings[i] for i in members))
            nodes = frozenset(n for e in edges for n in e)
            matches.append(StructureMatch(nodes, edges))
    return matches


def extract_structures(
    graph: GraphInstance, pattern: StructurePattern, feature_names: tuple[str, ...] = ()
) -> list[StructureMatch]:
    """All occurrences of the pattern, deduplicated by node set, sorted."""
    if isinstance(pattern, MotifGraph):
        matches = _match_motif(graph, pattern, feature_names)
    elif isinstance(pattern, Ring):
        matches = _match_ring(graph, pattern, feature_names)
    elif isinstance(pattern, FusedRings):
        matches = _match_fused(graph, pattern)
    else:
        raise TypeError(f"not a structure pattern: {pattern!r}")
    return sorted(matches, key=StructureMatch.sort_key)


# ---------------------------------------------------------------------------
# Mapping configuration and the graph translation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MappingConfig:
    """Naming rules for the translation: classes for each entity kind,
    roles linking the graph individual to its parts, and the structure
    pattern list (index order fixes the ``_<z>_`` component of structure
    individual names)."""

    graph_class: str
    edge_class: str
    feature_classes: dict[str, str]
    feature_names: tuple[str, ...]
    edge_role: str = "hasBond"
    feature_role: str = "hasAtom"
    structure_role: str = "hasStructure"
    structures: tuple[tuple[str, StructurePattern], ...] = ()

    def validate(self) -> None:
        names = [name for name, _ in self.structures]
        if len(set(names)) != len(names):
            raise MappingError("structure class names must be unique")
        for name in self.feature_names:
            if name not in self.feature_classes:
                raise MappingError(f"feature {name!r} has no class rule")


@dataclass
class MuMap:
    """Structure individual -> edge-individual set, with identity fallback
    on both directions for unmapped inputs."""

    forward: dict[str, frozenset[str]] = field(default_factory=dict)

    @cached_property
    def reverse(self) -> dict[frozenset[str], str]:
        out: dict[frozenset[str], str] = {}
        for key in sorted(self.forward):
            out.setdefault(self.forward[key], key)
        return out

    def merge(self, other: "MuMap") -> "MuMap":
        merged = dict(self.forward)
        merged.update(other.forward)
        return MuMap(merged)


def mu_inverse(mu: MuMap, individuals: frozenset[str]) -> frozenset[str]:
    """Replace each structure individual by its edge-individual set;
    anything unmapped passes through unchanged."""
    out: set[str] = set()
    for ind in individuals:
        expansion = mu.forward.get(ind)
        if expansion is None:
            out.add(ind)
        else:
            out |= expansion
    return frozenset(out)


def mu_apply(mu: MuMap, individuals: frozenset[str]) -> frozenset[str]:
    """Collapse an exact edge-individual set back to its structure
    individual; unmapped inputs are returned unchanged."""
    mapped = mu.reverse.get(frozenset(individuals))
    if mapped is not None:
        return frozenset({mapped})
    return frozenset(individuals)


def _active_features(
    graph: GraphInstance, allowed_dims: frozenset[int] | None
) -> list[tuple[int, int]]:
    pairs = []
    for node in range(graph.num_nodes):
        for dim in np.nonzero(graph.features[node])[0].tolist():
            if allowed_dims is None or dim in allowed_dims:
                pairs.append((node, dim))
    return pairs


def _translate(
    graph: GraphInstance,
    config: MappingConfig,
    prefix: str,
    suffix: str,
    edges: list[tuple[int, int]],
    allowed_dims: frozenset[int] | None,
    structure_host: GraphInstance,
) -> tuple[frozenset[Axiom], MuMap]:
    config.validate()
    axioms: list[Axiom] = []
    eta = f"graph_{prefix}{suffix}"
    axioms.append(ClassAssertion(config.graph_class, eta))

    edge_ids: dict[tuple[int, int], str] = {}
    for u, v in edges:
        name = f"edge_{prefix}_{u}_{v}{suffix}"
        edge_ids[(u, v)] = name
        axioms.append(ClassAssertion(config.edge_class, name))
        axioms.append(RoleAssertion(config.edge_role, eta, name))

    for node, dim in _active_features(graph, allowed_dims):
        feature_name = config.feature_names[dim]
        cls = config.feature_classes.get(feature_name)
        if cls is None:
            raise MappingError(f"feature {feature_name!r} has no class rule")
        name = f"feature_{prefix}_{node}{suffix}"
        axioms.append(ClassAssertion(cls, name))
        axioms.append(RoleAssertion(config.feature_role, eta, name))

    mu = MuMap()
    for z, (class_name, pattern) in enumerate(config.structures, start=1):
        matches = extract_structures(structure_host, pattern, config.feature_names)
        for number, match in enumerate(matches, start=1):
            psi = f"structure_{prefix}_{z}_{number}{suffix}"
            axioms.append(ClassAssertion(class_name, psi))
            axioms.append(RoleAssertion(config.structure_role, eta, psi))
            mu.forward[psi] = frozenset(
                edge_ids[e] for e in sorted(match.edges) if e in edge_ids
            )
    return frozenset(axioms), mu


def map_graph(
    graph: GraphInstance, config: MappingConfig, id_prefix: str | None = None
) -> tuple[frozenset[Axiom], MuMap]:
    """Translate one full graph into axioms plus its structure map."""
    prefix = str(graph.graph_id) if id_prefix is None else id_prefix
    return _translate(
        graph, config, prefix, "", graph.edges(), None, structure_host=graph
    )


def map_masked_subgraph(
    graph: GraphInstance,
    mask: MaskPair,
    config: MappingConfig,
    id_prefix: str | None = None,
) -> tuple[frozenset[Axiom], MuMap]:
    """Translate the binarized explainer subgraph; names carry a ``_sub``
    suffix so both namespaces coexist in one ontology."""
    prefix = str(graph.graph_id) if id_prefix is None else id_prefix
    graph_edges = set(graph.edges())
    kept = sorted(mask.binarized_edges)
    stray = [e for e in kept if tuple(e) not in graph_edges]
    if stray:
        raise MappingError(f"masked edge {stray[0]} not present in graph {prefix}")
    masked_adjacency = np.zeros_like(graph.adjacency)
    for u, v in kept:
        masked_adjacency[u, v] = 1
        masked_adjacency[v, u] = 1
    host = GraphInstance(
        graph_id=graph.graph_id,
        adjacency=masked_adjacency,
        features=graph.features,
        label=graph.label,
    )
    return _translate(
        graph,
        config,
        prefix,
        "_sub",
        kept,
        frozenset(mask.binarized_features),
        structure_host=host,
    )


def subgraph_individuals(axioms: frozenset[Axiom], strip_suffix: bool = True) -> frozenset[str]:
    """Edge and feature individual ids emitted by a masked-subgraph
    translation, normalized to base-graph ids by dropping ``_sub``."""
    out = set()
    for axiom in axioms:
        if isinstance(axiom, ClassAssertion):
            ind = axiom.individual
            if ind.startswith(("edge_", "feature_")):
                if strip_suffix and ind.endswith("_sub"):
                    ind = ind[: -len("_sub")]
                out.add(ind)
    return frozenset(out)


# ---------------------------------------------------------------------------
# Pattern and mu file formats
# ---------------------------------------------------------------------------
#
# Pattern file: blocks of lines, one pattern each.
#   pattern <ClassName> motif      pattern <ClassName> ring      pattern <ClassName> fused
#     node <idx> <feature|*>          size <k>                      min_rings <m>
#     edge <u> <v>                    all <feature|*>
#   end                               position <p> <feature|*>
#                                     aromatic true|false
#                                   end


def dumps_patterns(structures: tuple[tuple[str, StructurePattern], ...]) -> str:
    lines = []
    for name, pattern in structures:
        if isinstance(pattern, MotifGraph):
            lines.append(f"pattern {name} motif")
            for i, constraint in enumerate(pattern.node_constraints):
                lines.append(f"node {i} {constraint if constraint else '*'}")
            for u, v in pattern.edges:
                lines.append(f"edge {u} {v}")
        elif isinstance(pattern, Ring):
            lines.append(f"pattern {name} ring")
            lines.append(f"size {pattern.size}")
            distinct = set(pattern.constraints)
            if len(distinct) == 1:
                only = pattern.constraints[0]
                lines.append(f"all {only if only else '*'}")
            else:
                for p, constraint in enumerate(pattern.constraints):
                    lines.append(f"position {p} {constraint if constraint else '*'}")
            if pattern.aromatic:
                lines.append("aromatic true")
        elif isinstance(pattern, FusedRings):
            lines.append(f"pattern {name} fused")
            lines.append(f"min_rings {pattern.min_rings}")
        else:
            raise TypeError(f"not a structure pattern: {pattern!r}")
        lines.append("end")
    return "\n".join(lines) + "\n"


def loads_patterns(text: str) -> tuple[tuple[str, StructurePattern], ...]:
    out: list[tuple[str, StructurePattern]] = []
    block: list[list[str]] = []
    header: list[str] | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "pattern":
            if header is not None:
                raise MappingError(f"line {lineno}: nested pattern block")
            if len(parts) != 3 or parts[2] not in ("motif", "ring", "fused"):
                raise MappingError(f"line {lineno}: bad pattern header {line!r}")
            header = parts
            block = []
        elif parts[0] == "end":
            if header is None:
                raise MappingError(f"line {lineno}: stray end")
            out.append((header[1], _build_pattern(header[2], block, lineno)))
            header = None
        else:
            if header is None:
                raise MappingError(f"line {lineno}: line outside pattern block")
            block.append(parts)
    if header is not None:
        raise MappingError("unterminated pattern block")
    return tuple(out)


def _build_pattern(kind: str, block: list[list[str]], lineno: int) -> StructurePattern:
    def constraint(token: str) -> str | None:
        return None if token == "*" else token

    if kind == "motif":
        nodes: dict[int, str | None] = {}
        edges = []
        for parts in block:
            if parts[0] == "node" and len(parts) == 3:
                nodes[int(parts[1])] = constraint(parts[2])
            elif parts[0] == "edge" and len(parts) == 3:
                edges.append((int(parts[1]), int(parts[2])))
            else:
                raise MappingError(f"near line {lineno}: bad motif line {parts!r}")
        constraints = tuple(nodes.get(i) for i in range(len(nodes)))
        motif = MotifGraph(constraints, tuple(edges))
        motif.validate()
        return motif
    if kind == "ring":
        size = None
        fill: str | None = None
        positions: dict[int, str | None] = {}
        aromatic = False
        for parts in block:
            if parts[0] == "size" and len(parts) == 2:
                size = int(parts[1])
            elif parts[0] == "all" and len(parts) == 2:
                fill = parts[1]
            elif parts[0] == "position" and len(parts) == 3:
                positions[int(parts[1])] = constraint(parts[2])
            elif parts[0] == "aromatic" and len(parts) == 2:
                aromatic = parts[1] == "true"
            else:
                raise MappingError(f"near line {lineno}: bad ring line {parts!r}")
        if size is None:
            raise MappingError(f"near line {lineno}: ring block lacks size")
        if fill is not None:
            constraints = tuple([constraint(fill)] * size)
        else:
            constraints = tuple(positions.get(i) for i in range(size))
        ring = Ring(size, constraints, aromatic)
        ring.validate()
        return ring
    if kind == "fused":
        for parts in block:
            if parts[0] == "min_rings" and len(parts) == 2:
                fused = FusedRings(int(parts[1]))
                fused.validate()
                return fused
        raise MappingError(f"near line {lineno}: fused block lacks min_rings")
    raise MappingError(f"unknown pattern kind {kind!r}")


def dumps_mu(mu: MuMap) -> str:
    lines = []
    for key in sorted(mu.forward):
        edges = ", ".join(sorted(mu.forward[key]))
        lines.append(f"mu({key}) = [{edges}]")
    return "\n".join(lines) + "\n" if lines else ""


def loads_mu(text: str) -> MuMap:
    mu = MuMap()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if not (line.startswith("mu(") and "=" in line):
            raise MappingError(f"line {lineno}: bad mu line {line!r}")
        head, _, tail = line.partition("=")
        key = head.strip()[3:-1].strip()
        tail = tail.strip()
        if not (tail.startswith("[") and tail.endswith("]")):
            raise MappingError(f"line {lineno}: bad mu value {tail!r}")
        body = tail[1:-1].strip()
        edges = frozenset(part.strip() for part in body.split(",") if part.strip())
        mu.forward[key] = edges
    return mu


def dumps_mapping_config(config: MappingConfig) -> str:
    """Naming part of a translation config (patterns travel separately in
    the pattern file format)."""
    lines = [
        f"graph_class {config.graph_class}",
        f"edge_class {config.edge_class}",
        f"edge_role {config.edge_role}",
        f"feature_role {config.feature_role}",
        f"structure_role {config.structure_role}",
    ]
    for name in config.feature_names:
        lines.append(f"feature {name} {config.feature_classes[name]}")
    return "\n".join(lines) + "\n"


def loads_mapping_config(
    text: str, structures: tuple[tuple[str, StructurePattern], ...] = ()
) -> MappingConfig:
    fields: dict[str, str] = {}
    feature_names: list[str] = []
    feature_classes: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "feature" and len(parts) == 3:
            feature_names.append(parts[1])
            feature_classes[parts[1]] = parts[2]
        elif len(parts) == 2 and parts[0] in (
            "graph_class", "edge_class", "edge_role", "feature_role", "structure_role",
        ):
            fields[parts[0]] = parts[1]
        else:
            raise MappingError(f"line {lineno}: unrecognized config line {line!r}")
    missing = {"graph_class", "edge_class"} - fields.keys()
    if missing:
        raise MappingError(f"config missing {sorted(missing)}")
    config = MappingConfig(
        graph_class=fields["graph_class"],
        edge_class=fields["edge_class"],
        feature_classes=feature_classes,
        feature_names=tuple(feature_names),
        edge_role=fields.get("edge_role", "hasBond"),
        feature_role=fields.get("feature_role", "hasAtom"),
        structure_role=fields.get("structure_role", "hasStructure"),
        structures=structures,
    )
    config.validate()
    return config
