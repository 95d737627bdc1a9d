"""Graph convolutional classifier in plain numpy.

Three propagation layers with symmetric degree normalization, relu on the
first two, a linear third layer, mean pooling over nodes and a softmax
readout. Gradients are hand-written; ``loss_and_gradients`` is checked
against central finite differences in the test suite.

Weighted adjacencies are supported (mask optimization feeds fractional
edge weights through the same forward pass).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

Array = np.ndarray


@dataclass(frozen=True, eq=False)
class GraphInstance:
    """One undirected graph: dense 0/1 adjacency without self loops,
    row-per-node feature matrix, binary class label."""

    graph_id: int
    adjacency: Array
    features: Array
    label: int

    @property
    def num_nodes(self) -> int:
        return self.adjacency.shape[0]

    def edges(self) -> list[tuple[int, int]]:
        """Undirected edge list as (u, v) with u < v, sorted."""
        rows, cols = np.nonzero(np.triu(self.adjacency, k=1))
        return sorted(zip(rows.tolist(), cols.tolist()))

    def validate(self) -> None:
        a = self.adjacency
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError("adjacency must be square")
        if not np.array_equal(a, a.T):
            raise ValueError("adjacency must be symmetric")
        if np.any(np.diag(a) != 0):
            raise ValueError("adjacency must have an empty diagonal")
        if self.features.shape[0] != a.shape[0]:
            raise ValueError("feature rows must match node count")


@dataclass
class GcnModel:
    """Learnable parameters: one matrix per propagation layer plus the
    readout matrix mapping pooled embeddings to class logits."""

    weights: list[Array]
    readout: Array

    @property
    def feature_dim(self) -> int:
        return self.weights[0].shape[0]

    @property
    def num_classes(self) -> int:
        return self.readout.shape[1]

    def copy(self) -> "GcnModel":
        return GcnModel([w.copy() for w in self.weights], self.readout.copy())

    def parameters(self) -> dict[str, Array]:
        named = {f"W{i + 1}": w for i, w in enumerate(self.weights)}
        named["Wc"] = self.readout
        return named


@dataclass(frozen=True)
class TrainConfig:
    hidden_dim: int = 32
    embed_dim: int = 16
    num_classes: int = 2
    epochs: int = 600
    learning_rate: float = 0.05
    momentum: float = 0.9
    seed: int = 0


def init_model(feature_dim: int, config: TrainConfig) -> GcnModel:
    rng = np.random.default_rng(config.seed)
    dims = [feature_dim, config.hidden_dim, config.hidden_dim, config.embed_dim]
    weights = []
    for fan_in, fan_out in zip(dims, dims[1:]):
        scale = np.sqrt(2.0 / fan_in)
        weights.append(rng.normal(0.0, scale, size=(fan_in, fan_out)))
    readout = rng.normal(
        0.0, np.sqrt(1.0 / config.embed_dim), size=(config.embed_dim, config.num_classes)
    )
    return GcnModel(weights, readout)


def normalized_adjacency(adjacency: Array) -> tuple[Array, Array, Array]:
    """Self-looped adjacency, its degree vector and D^{-1/2} A_hat D^{-1/2}."""
    a_hat = adjacency.astype(float) + np.eye(adjacency.shape[0])
    degrees = a_hat.sum(axis=1)
    inv_sqrt = degrees ** -0.5
    return a_hat, degrees, a_hat * np.outer(inv_sqrt, inv_sqrt)


@dataclass
class ForwardCache:
    """Intermediates of one forward pass, kept for backpropagation."""

    a_hat: Array
    degrees: Array
    propagator: Array
    hidden: list[Array] = field(default_factory=list)
    pre_activations: list[Array] = field(default_factory=list)
    pooled: Array | None = None
    logits: Array | None = None
    probs: Array | None = None


def gcn_forward(model: GcnModel, features: Array, adjacency: Array) -> ForwardCache:
    """Run the network on one graph; adjacency entries may be fractional."""
    a_hat, degrees, prop = normalized_adjacency(adjacency)
    cache = ForwardCache(a_hat, degrees, prop, hidden=[features.astype(float)])
    last = len(model.weights) - 1
    for i, weight in enumerate(model.weights):
        z = prop @ cache.hidden[-1] @ weight
        cache.pre_activations.append(z)
        cache.hidden.append(z if i == last else np.maximum(z, 0.0))
    cache.pooled = cache.hidden[-1].mean(axis=0)
    cache.logits = cache.pooled @ model.readout
    shifted = cache.logits - cache.logits.max()
    exp = np.exp(shifted)
    cache.probs = exp / exp.sum()
    return cache


def predict_proba(model: GcnModel, graph: GraphInstance) -> Array:
    return gcn_forward(model, graph.features, graph.adjacency).probs


def predict(model: GcnModel, graph: GraphInstance) -> int:
    return int(np.argmax(predict_proba(model, graph)))


def dataset_loss(model: GcnModel, graphs: list[GraphInstance]) -> float:
    """Mean cross-entropy of the true labels."""
    total = 0.0
    for graph in graphs:
        probs = predict_proba(model, graph)
        total -= np.log(max(probs[graph.label], 1e-300))
    return total / len(graphs)


def _zero_grads(model: GcnModel) -> dict[str, Array]:
    return {name: np.zeros_like(value) for name, value in model.parameters().items()}


def _backward_graph(
    model: GcnModel, cache: ForwardCache, d_logits: Array, grads: dict[str, Array]
) -> Array:
    """Accumulate parameter gradients for one graph; returns dL/dH0."""
    n = cache.a_hat.shape[0]
    grads["Wc"] += np.outer(cache.pooled, d_logits)
    d_pooled = model.readout @ d_logits
    d_hidden = np.tile(d_pooled / n, (n, 1))
    last = len(model.weights) - 1
    for i in range(last, -1, -1):
        d_z = d_hidden if i == last else d_hidden * (cache.pre_activations[i] > 0)
        propagated = cache.propagator @ cache.hidden[i]
        grads[f"W{i + 1}"] += propagated.T @ d_z
        d_hidden = cache.propagator.T @ (d_z @ model.weights[i].T)
    return d_hidden


def loss_and_gradients(
    model: GcnModel, graphs: list[GraphInstance]
) -> tuple[float, dict[str, Array]]:
    """Mean cross-entropy and its gradient wrt every parameter."""
    grads = _zero_grads(model)
    total = 0.0
    scale = 1.0 / len(graphs)
    for graph in graphs:
        cache = gcn_forward(model, graph.features, graph.adjacency)
        total -= np.log(max(cache.probs[graph.label], 1e-300))
        d_logits = cache.probs.copy()
        d_logits[graph.label] -= 1.0
        _backward_graph(model, cache, d_logits * scale, grads)
    return total * scale, grads


def train(
    graphs: list[GraphInstance], config: TrainConfig = TrainConfig()
) -> tuple[GcnModel, list[float]]:
    """Full-batch gradient descent with momentum; returns the model and the
    per-epoch loss history. Deterministic for a fixed seed."""
    if not graphs:
        raise ValueError("empty training set")
    model = init_model(graphs[0].features.shape[1], config)
    velocity = _zero_grads(model)
    history = []
    params = model.parameters()
    for epoch in range(config.epochs):
        loss, grads = loss_and_gradients(model, graphs)
        if not np.isfinite(loss):
            raise FloatingPointError(f"training diverged at epoch {epoch}: loss={loss}")
        history.append(loss)
        for name, value in params.items():
            velocity[name] = config.momentum * velocity[name] - config.learning_rate * grads[name]
            value += velocity[name]
    return model, history


def evaluate_accuracy(model: GcnModel, graphs: list[GraphInstance]) -> float:
    if not graphs:
        return float("nan")
    hits = sum(1 for g in graphs if predict(model, g) == g.label)
    return hits / len(graphs)


def augment_features_with_structures(
    graphs: list[GraphInstance], structure_indicators: list
) -> list[GraphInstance]:
    """Widen node features with per-graph structure indicator bits.

    Each graph gets one extra column per known structure pattern, filled
    with that graph's indicator value on every node row. All indicator
    vectors must share one length.
    """
    if len(graphs) != len(structure_indicators):
        raise ValueError("one indicator vector per graph required")
    vectors = [np.asarray(v, dtype=float).ravel() for v in structure_indicators]
    lengths = {v.shape[0] for v in vectors}
    if len(lengths) > 1:
        raise ValueError(f"indicator lengths differ: {sorted(lengths)}")
    out = []
    for graph, vec in zip(graphs, vectors):
        extra = np.tile(vec, (graph.num_nodes, 1))
        out.append(replace(graph, features=np.hstack([graph.features, extra])))
    return out


# ---------------------------------------------------------------------------
# Model file format: shape headers plus repr-precision rows, so weights
# survive a save/load cycle bit for bit.
# ---------------------------------------------------------------------------


def dumps_model(model: GcnModel) -> str:
    lines = []

    def emit(tag: str, matrix: Array) -> None:
        lines.append(f"{tag} {matrix.shape[0]} {matrix.shape[1]}")
        for row in matrix:
            lines.append(" ".join(repr(float(x)) for x in row))

    for index, weight in enumerate(model.weights):
        emit(f"layer_{index}", weight)
    emit("readout", model.readout)
    return "\n".join(lines) + "\n"


def loads_model(text: str) -> GcnModel:
    lines = [l for l in text.splitlines() if l.strip() and not l.startswith("#")]
    matrices: dict[str, Array] = {}
    order: list[str] = []
    i = 0
    while i < len(lines):
        tag, rows, cols = lines[i].split()
        rows, cols = int(rows), int(cols)
        block = lines[i + 1 : i + 1 + rows]
        if len(block) != rows:
            raise ValueError(f"matrix {tag}: expected {rows} rows")
        matrix = np.array([[float(x) for x in row.split()] for row in block])
        if matrix.shape != (rows, cols):
            raise ValueError(f"matrix {tag}: shape mismatch")
        matrices[tag] = matrix
        order.append(tag)
        i += 1 + rows
    layer_tags = sorted(
        (t for t in order if t.startswith("layer_")), key=lambda t: int(t.split("_")[1])
    )
    if "readout" not in matrices or not layer_tags:
        raise ValueError("model file needs layer_<i> blocks and a readout block")
    return GcnModel([matrices[t] for t in layer_tags], matrices["readout"])
