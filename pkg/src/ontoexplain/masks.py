"""Mask-based explanation of a trained graph classifier.

Learns a weight in (0,1) per existing undirected edge and per feature
dimension so that the masked graph keeps the model's original prediction
while the masks stay small and crisp. Objective:

    CE(model(A * sig(m_E), X * sig(m_X)), original prediction)
      + lambda_size * sum(sig(m)) + lambda_entropy * H(sig(m))

applied to both masks, optimized with momentum gradient descent. Model
weights are never touched. Everything is deterministic: masks start from a
constant logit, no randomness involved.

The tricky part is the gradient of the loss through the degree
normalization D^{-1/2} (A+I) D^{-1/2}, where each edge weight moves both an
adjacency entry and two degrees; ``_adjacency_gradient`` handles it and is
finite-difference checked in the tests.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gnn import Array, ForwardCache, GcnModel, GraphInstance, gcn_forward


@dataclass(frozen=True)
class ExplainConfig:
    lambda_size: float = 0.005
    lambda_entropy: float = 0.1
    epochs: int = 100
    learning_rate: float = 0.01
    momentum: float = 0.9
    threshold: float = 0.5
    top_k_edges: int = 6


@dataclass(frozen=True)
class MaskPair:
    """Continuous edge/feature importances plus their binarized selections.

    ``edge_weights`` maps each existing undirected edge (u, v), u < v, to a
    weight in [0, 1]; ``feature_weights`` holds one weight per feature
    dimension. Binarized sets keep weights at or above the threshold, edges
    additionally capped at the top_k heaviest.
    """

    graph_id: int
    edge_weights: tuple[tuple[tuple[int, int], float], ...]
    feature_weights: tuple[float, ...]
    binarized_edges: frozenset[tuple[int, int]]
    binarized_features: frozenset[int]

    def edge_weight_dict(self) -> dict[tuple[int, int], float]:
        return dict(self.edge_weights)


def _sigmoid(x: Array) -> Array:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def apply_masks(
    graph: GraphInstance, edge_values: dict[tuple[int, int], float], feature_values: Array
) -> tuple[Array, Array]:
    """Masked (features, adjacency) for a graph; weights of 1 reproduce the
    inputs exactly."""
    adjacency = graph.adjacency.astype(float).copy()
    for (u, v), w in edge_values.items():
        adjacency[u, v] *= w
        adjacency[v, u] *= w
    features = graph.features * np.asarray(feature_values)[None, :]
    return features, adjacency


def _adjacency_gradient(cache: ForwardCache, d_prop: Array) -> Array:
    """dLoss/dA_hat given dLoss/dPropagator, through s_i = degree_i^{-1/2}.

    Propagator P_ij = s_i s_j A_hat_ij and degree_i = sum_j A_hat_ij, so an
    entry feeds the loss directly and through two scale factors.
    """
    s = cache.degrees ** -0.5
    direct = d_prop * np.outer(s, s)
    weighted = d_prop * cache.a_hat
    d_s = weighted @ s + weighted.T @ s
    d_deg = d_s * (-0.5) * cache.degrees ** -1.5
    return direct + d_deg[:, None]


def _masked_backward(
    model: GcnModel, cache: ForwardCache, target: int
) -> tuple[float, Array, Array]:
    """Cross-entropy of the target label plus its gradients wrt the masked
    adjacency entries and the masked input features."""
    loss = -float(np.log(max(cache.probs[target], 1e-300)))
    d_logits = cache.probs.copy()
    d_logits[target] -= 1.0
    n = cache.a_hat.shape[0]
    d_hidden = np.tile((model.readout @ d_logits) / n, (n, 1))
    d_prop = np.zeros_like(cache.propagator)
    last = len(model.weights) - 1
    for i in range(last, -1, -1):
        d_z = d_hidden if i == last else d_hidden * (cache.pre_activations[i] > 0)
        d_prop += d_z @ (cache.hidden[i] @ model.weights[i]).T
        d_hidden = cache.propagator.T @ (d_z @ model.weights[i].T)
    return loss, _adjacency_gradient(cache, d_prop), d_hidden


def masked_loss_and_gradients(
    model: GcnModel,
    graph: GraphInstance,
    edge_logits: Array,
    feature_logits: Array,
    target: int,
    config: ExplainConfig,
) -> tuple[float, Array, Array]:
    """Full mask objective and its gradient wrt both logit vectors."""
    edges = graph.edges()
    edge_sig = _sigmoid(edge_logits)
    feat_sig = _sigmoid(feature_logits)
    features, adjacency = apply_masks(
        graph, dict(zip(edges, edge_sig)), feat_sig
    )
    cache = gcn_forward(model, features, adjacency)
    loss, d_ahat, d_features = _masked_backward(model, cache, target)

    edge_sig_grad = edge_sig * (1.0 - edge_sig)
    feat_sig_grad = feat_sig * (1.0 - feat_sig)
    d_edge = np.array(
        [(d_ahat[u, v] + d_ahat[v, u]) for (u, v) in edges]
    ) * edge_sig_grad
    d_feat = (d_features * graph.features).sum(axis=0) * feat_sig_grad

    for sig, logits, grad in (
        (edge_sig, edge_logits, d_edge),
        (feat_sig, feature_logits, d_feat),
    ):
        loss += config.lambda_size * float(sig.sum())
        grad += config.lambda_size * sig * (1.0 - sig)
        p = np.clip(sig, 1e-12, 1.0 - 1e-12)
        loss += config.lambda_entropy * float(
            -(p * np.log(p) + (1.0 - p) * np.log(1.0 - p)).sum()
        )
        grad += config.lambda_entropy * (-logits) * sig * (1.0 - sig)
    return loss, d_edge, d_feat


def _binarize(
    edges: list[tuple[int, int]], edge_sig: Array, feat_sig: Array, config: ExplainConfig
) -> tuple[frozenset[tuple[int, int]], frozenset[int]]:
    kept = [(w, e) for e, w in zip(edges, edge_sig) if w >= config.threshold]
    kept.sort(key=lambda pair: (-pair[0], pair[1]))
    chosen = frozenset(e for _, e in kept[: config.top_k_edges])
    features = frozenset(
        int(i) for i, w in enumerate(feat_sig) if w >= config.threshold
    )
    return chosen, features


def explain_masks(
    model: GcnModel, graph: GraphInstance, config: ExplainConfig = ExplainConfig()
) -> MaskPair:
    """Optimize edge and feature masks for one graph against the model's
    own prediction on the unmasked input."""
    target = int(np.argmax(gcn_forward(model, graph.features, graph.adjacency).probs))
    edges = graph.edges()
    # logit 0 puts every weight at 0.5, the neutral point of the entropy
    # term, so the data decides which side each edge falls on
    edge_logits = np.zeros(len(edges))
    feature_logits = np.zeros(graph.features.shape[1])
    v_edge = np.zeros_like(edge_logits)
    v_feat = np.zeros_like(feature_logits)
    for _ in range(config.epochs):
        _, d_edge, d_feat = masked_loss_and_gradients(
            model, graph, edge_logits, feature_logits, target, config
        )
        v_edge = config.momentum * v_edge - config.learning_rate * d_edge
        v_feat = config.momentum * v_feat - config.learning_rate * d_feat
        edge_logits = edge_logits + v_edge
        feature_logits = feature_logits + v_feat
    edge_sig = _sigmoid(edge_logits)
    feat_sig = _sigmoid(feature_logits)
    binar_edges, binar_feats = _binarize(edges, edge_sig, feat_sig, config)
    return MaskPair(
        graph_id=graph.graph_id,
        edge_weights=tuple(zip(edges, (float(w) for w in edge_sig))),
        feature_weights=tuple(float(w) for w in feat_sig),
        binarized_edges=binar_edges,
        binarized_features=binar_feats,
    )


def full_mask(graph: GraphInstance) -> MaskPair:
    """Mask keeping everything; handy as an identity element in tests."""
    edges = graph.edges()
    return MaskPair(
        graph_id=graph.graph_id,
        edge_weights=tuple((e, 1.0) for e in edges),
        feature_weights=tuple(1.0 for _ in range(graph.features.shape[1])),
        binarized_edges=frozenset(edges),
        binarized_features=frozenset(range(graph.features.shape[1])),
    )


# ---------------------------------------------------------------------------
# Mask file format: one block per graph, weights written with repr so the
# round trip is exact.
# ---------------------------------------------------------------------------


def dumps_masks(masks: dict[int, MaskPair]) -> str:
    lines = []
    for gid in sorted(masks):
        mask = masks[gid]
        lines.append(f"mask {gid}")
        for (u, v), w in mask.edge_weights:
            lines.append(f"edge {u} {v} {w!r}")
        for dim, w in enumerate(mask.feature_weights):
            lines.append(f"feature {dim} {w!r}")
        for u, v in sorted(mask.binarized_edges):
            lines.append(f"kept_edge {u} {v}")
        for dim in sorted(mask.binarized_features):
            lines.append(f"kept_feature {dim}")
        lines.append("end")
    return "\n".join(lines) + "\n"


def loads_masks(text: str) -> dict[int, MaskPair]:
    masks: dict[int, MaskPair] = {}
    current: dict | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if parts[0] == "mask":
            if current is not None:
                raise ValueError(f"line {lineno}: mask block not closed")
            current = {
                "id": int(parts[1]),
                "edges": [],
                "features": {},
                "kept_edges": set(),
                "kept_features": set(),
            }
        elif current is None:
            raise ValueError(f"line {lineno}: {parts[0]!r} outside mask block")
        elif parts[0] == "edge":
            current["edges"].append(((int(parts[1]), int(parts[2])), float(parts[3])))
        elif parts[0] == "feature":
            current["features"][int(parts[1])] = float(parts[2])
        elif parts[0] == "kept_edge":
            current["kept_edges"].add((int(parts[1]), int(parts[2])))
        elif parts[0] == "kept_feature":
            current["kept_features"].add(int(parts[1]))
        elif parts[0] == "end":
            dims = current["features"]
            if sorted(dims) != list(range(len(dims))):
                raise ValueError(f"mask {current['id']}: feature dims must be 0..d-1")
            masks[current["id"]] = MaskPair(
                graph_id=current["id"],
                edge_weights=tuple(current["edges"]),
                feature_weights=tuple(dims[d] for d in range(len(dims))),
                binarized_edges=frozenset(current["kept_edges"]),
                binarized_features=frozenset(current["kept_features"]),
            )
            current = None
        else:
            raise ValueError(f"line {lineno}: unrecognized line {line!r}")
    if current is not None:
        raise ValueError("unterminated mask block")
    return masks
