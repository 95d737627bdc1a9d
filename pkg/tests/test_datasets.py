"""Generator invariants, ground-truth annotations and dataset files."""

import numpy as np
import pytest

from ontoexplain.datasets import (
    FEATURE_NAMES,
    DatasetFormatError,
    SyntheticSpec,
    default_mapping_config,
    domain_ontology,
    dumps_annotations,
    dumps_dataset,
    generate,
    load_dataset,
    loads_annotations,
    loads_dataset,
    save_dataset,
)
from ontoexplain.mapping import Ring, extract_structures
from ontoexplain.ontology import Atomic, loads_ontology
from ontoexplain.reasoner import instance_check

NITRO_OXYGENS = {"attached": 2, "detached": 2, "nitroso": 1, "bare": 0, "plain": 0}


def node_kinds(graph):
    return [FEATURE_NAMES[int(np.argmax(row))] for row in graph.features]


def edge_kinds(graph):
    kinds = node_kinds(graph)
    return [tuple(sorted((kinds[u], kinds[v]))) for u, v in graph.edges()]


def test_every_graph_is_valid_and_annotated():
    dataset = generate(SyntheticSpec(num_graphs=40, seed=1))
    assert len(dataset.graphs) == 40
    assert len(dataset.annotations) == 40
    for graph, truth in zip(dataset.graphs, dataset.annotations):
        graph.validate()
        assert graph.graph_id == truth.graph_id


def test_class_signal_lives_only_in_nitrogen_oxygen_edges():
    spec = SyntheticSpec(num_graphs=60, seed=2)
    dataset = generate(spec)
    for graph, truth in zip(dataset.graphs, dataset.annotations):
        kinds = node_kinds(graph)
        pairs = edge_kinds(graph)
        # constant oxygen census and tether count in both classes
        assert kinds.count("O") == spec.oxygen_count
        assert pairs.count(("C", "O")) == spec.oxygen_count
        assert pairs.count(("N", "O")) == NITRO_OXYGENS[truth.variant]
        assert kinds.count("N") == (0 if truth.variant == "plain" else 1)
        assert len(truth.motif_edges) == NITRO_OXYGENS[truth.variant]
        for u, v in truth.motif_edges:
            assert {kinds[u], kinds[v]} == {"N", "O"}
            assert graph.adjacency[u, v] == 1.0


def test_exactly_one_carbon_ring_matching_annotation():
    dataset = generate(SyntheticSpec(num_graphs=30, seed=3))
    for graph, truth in zip(dataset.graphs, dataset.annotations):
        matches = extract_structures(graph, Ring(6, ("C",) * 6), FEATURE_NAMES)
        assert len(matches) == 1
        assert matches[0].nodes == frozenset(truth.ring_nodes)


def test_attachment_point_separates_classes():
    dataset = generate(SyntheticSpec(num_graphs=60, seed=4))
    for graph, truth in zip(dataset.graphs, dataset.annotations):
        assert truth.true_label == (1 if truth.variant == "attached" else 0)
        if truth.variant in ("attached", "nitroso"):
            kinds = node_kinds(graph)
            nitrogen = kinds.index("N")
            ring_neighbors = set(np.nonzero(graph.adjacency[nitrogen])[0]) & set(
                truth.ring_nodes
            )
            assert ring_neighbors
        if truth.variant == "detached":
            kinds = node_kinds(graph)
            nitrogen = kinds.index("N")
            assert not set(np.nonzero(graph.adjacency[nitrogen])[0]) & set(truth.ring_nodes)


def test_labels_balanced_and_clean_without_noise():
    dataset = generate(SyntheticSpec(num_graphs=100, seed=5))
    labels = [g.label for g in dataset.graphs]
    assert labels.count(1) == 50
    for graph, truth in zip(dataset.graphs, dataset.annotations):
        assert graph.label == truth.true_label


def test_noise_flips_at_roughly_requested_rate():
    spec = SyntheticSpec(num_graphs=400, noise_rate=0.1, seed=6)
    dataset = generate(spec)
    flips = sum(
        int(g.label != t.true_label) for g, t in zip(dataset.graphs, dataset.annotations)
    )
    assert 0.05 <= flips / 400 <= 0.16


def test_generation_is_deterministic():
    a = generate(SyntheticSpec(num_graphs=20, seed=7))
    b = generate(SyntheticSpec(num_graphs=20, seed=7))
    for left, right in zip(a.graphs, b.graphs):
        assert np.array_equal(left.adjacency, right.adjacency)
        assert np.array_equal(left.features, right.features)
        assert left.label == right.label
    assert a.annotations == b.annotations


def test_spec_validation():
    with pytest.raises(ValueError):
        SyntheticSpec(tree_size_range=(5, 3)).validate()
    with pytest.raises(ValueError):
        SyntheticSpec(detached_prob=0.9).validate()  # variants no longer sum to 1
    with pytest.raises(ValueError):
        SyntheticSpec(noise_rate=1.5).validate()
    with pytest.raises(ValueError):
        SyntheticSpec(hydrogen_prob=-0.1).validate()
    with pytest.raises(ValueError):
        SyntheticSpec(oxygen_count=1).validate()
    with pytest.raises(ValueError):
        SyntheticSpec(num_graphs=1).validate()
    SyntheticSpec().validate()


def test_domain_hierarchy_has_three_levels():
    probe = domain_ontology().merge(loads_ontology("Type(s, Carbon_6_ring)\n"))
    assert instance_check(probe, Atomic("Ring_size_6"), "s")
    assert instance_check(probe, Atomic("RingStructure"), "s")


def test_mapping_config_covers_feature_names():
    config = default_mapping_config()
    config.validate()
    assert config.feature_names == FEATURE_NAMES
    assert [name for name, _ in config.structures] == [
        "Nitro_group",
        "Nitroso_group",
        "Carbon_6_ring",
    ]


def test_dataset_file_round_trip(tmp_path):
    dataset = generate(SyntheticSpec(num_graphs=10, seed=8))
    path = tmp_path / "dataset.txt"
    save_dataset(dataset.graphs, FEATURE_NAMES, path)
    loaded = load_dataset(path)
    assert loaded.feature_names == FEATURE_NAMES
    for left, right in zip(dataset.graphs, loaded.graphs):
        assert left.graph_id == right.graph_id
        assert left.label == right.label
        assert np.array_equal(left.adjacency, right.adjacency)
        assert np.array_equal(left.features, right.features)


def test_annotations_round_trip():
    dataset = generate(SyntheticSpec(num_graphs=15, seed=9))
    assert loads_annotations(dumps_annotations(dataset.annotations)) == dataset.annotations


@pytest.mark.parametrize(
    "text",
    [
        "graph 0 1\nnode 0 C\nend\n",  # features header missing
        "features C\ngraph 0 1\nnode 0 C\n",  # unterminated
        "features C\ngraph 0 1\nnode 1 C\nend\n",  # indices not 0..n-1
        "features C\ngraph 0 1\nnode 0 C\nedge 0 5\nend\n",
        "features C\ngraph 0 1\nnode 0 C\nedge 0 0\nend\n",
        "features C\ngraph 0 1\nnode 0 X\nend\n",
        "features C\nwhat\n",
        "features C\ngraph 0 1\nend\n",  # no nodes
    ],
)
def test_loads_dataset_rejects(text):
    with pytest.raises(DatasetFormatError):
        loads_dataset(text)


def test_loads_dataset_accepts_bare_nodes():
    loaded = loads_dataset("features C N\ngraph 4 0\nnode 0 C\nnode 1\nend\n")
    graph = loaded.graphs[0]
    assert graph.num_nodes == 2
    assert np.array_equal(graph.features[1], np.zeros(2))
