"""Command-line pipeline with file-based stage handoff.

Each subcommand reads its inputs from the run directory (``--out``), writes
deterministic artifacts back into it and exits nonzero with a diagnostic
when a required input is missing or malformed. Stages compose through
files only, so any stage can be rerun or inspected in isolation:

    generate -> train -> explain -> map -> learn-classes
        -> explain-instance / evaluate / compare-baselines
"""

from __future__ import annotations

import argparse
import os
import sys

from .datasets import (
    SyntheticSpec,
    dumps_annotations,
    dumps_dataset,
    generate,
    load_dataset,
    loads_annotations,
)
from .gnn import (
    TrainConfig,
    dumps_model,
    evaluate_accuracy,
    loads_model,
    train,
)
from .learner import LearnerConfig
from .mapping import (
    dumps_mapping_config,
    dumps_mu,
    dumps_patterns,
    loads_mapping_config,
    loads_mu,
    loads_patterns,
)
from .masks import ExplainConfig, dumps_masks, explain_masks, loads_masks
from .ontology import OntologyError, load_ontology, parse_manchester, save_ontology
from .pipeline import (
    KIND_IMPORTANCE,
    KIND_INPUT_OUTPUT,
    ExplainerClass,
    baseline_pure_ill,
    build_corpus,
    evaluate,
    explain_all,
    final_explanation,
    inject_pool,
    learn_explainer_classes,
    predictions_of,
    split_ids,
)

STAGE_HINTS = {
    "dataset.txt": "generate",
    "domain.ont": "generate",
    "patterns.txt": "generate",
    "mapping.txt": "generate",
    "model.txt": "train",
    "split.txt": "train",
    "predictions.txt": "train",
    "masks.txt": "explain",
    "mapped.ont": "map",
    "nomask.ont": "map",
    "mu.txt": "map",
    "subsets.txt": "map",
    "pool.tsv": "learn-classes",
}


class StageError(Exception):
    """Missing or malformed pipeline artifact."""


def _path(out: str, name: str) -> str:
    return os.path.join(out, name)


def _require(out: str, name: str) -> str:
    path = _path(out, name)
    if not os.path.exists(path):
        hint = STAGE_HINTS.get(name)
        extra = f"; run `{hint}` first" if hint else ""
        raise StageError(f"missing {path}{extra}")
    return path


def _write(path: str, content: str) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(content)


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as handle:
        return handle.read()


# ---------------------------------------------------------------------------
# Small artifact formats owned by the CLI
# ---------------------------------------------------------------------------


def _dump_split(train_ids: list[int], test_ids: list[int]) -> str:
    return (
        "train " + " ".join(str(i) for i in train_ids) + "\n"
        "test " + " ".join(str(i) for i in test_ids) + "\n"
    )


def _load_split(text: str) -> tuple[list[int], list[int]]:
    train_ids: list[int] = []
    test_ids: list[int] = []
    for line in text.splitlines():
        parts = line.split()
        if not parts:
            continue
        if parts[0] == "train":
            train_ids = [int(x) for x in parts[1:]]
        elif parts[0] == "test":
            test_ids = [int(x) for x in parts[1:]]
    if not train_ids or not test_ids:
        raise StageError("split file needs train and test lines")
    return train_ids, test_ids


def _dump_predictions(predictions: dict[int, int]) -> str:
    return "\n".join(f"{gid} {predictions[gid]}" for gid in sorted(predictions)) + "\n"


def _load_predictions(text: str) -> dict[int, int]:
    out: dict[int, int] = {}
    for line in text.splitlines():
        parts = line.split()
        if parts:
            out[int(parts[0])] = int(parts[1])
    return out


def _dump_subsets(subgraph_ids: dict[int, frozenset[str]]) -> str:
    lines = []
    for gid in sorted(subgraph_ids):
        ids = ",".join(sorted(subgraph_ids[gid])) or "-"
        lines.append(f"subgraph {gid} {ids}")
    return "\n".join(lines) + "\n"


def _load_subsets(text: str) -> dict[int, frozenset[str]]:
    out: dict[int, frozenset[str]] = {}
    for line in text.splitlines():
        parts = line.split()
        if parts and parts[0] == "subgraph":
            ids = frozenset() if parts[2] == "-" else frozenset(parts[2].split(","))
            out[int(parts[1])] = ids
    return out


def _dump_pool(pool: list[ExplainerClass]) -> str:
    lines = ["# name\tkind\tcategory\taccuracy\texpression"]
    for ec in pool:
        lines.append(f"{ec.name}\t{ec.kind}\t{ec.category}\t{ec.accuracy!r}\t{ec.expr}")
    return "\n".join(lines) + "\n"


def _load_pool(text: str) -> list[ExplainerClass]:
    pool = []
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        name, kind, category, accuracy, expr = line.split("\t")
        pool.append(
            ExplainerClass(name, kind, int(category), parse_manchester(expr), float(accuracy))
        )
    return pool


# ---------------------------------------------------------------------------
# Shared loading helpers
# ---------------------------------------------------------------------------


def _load_run_dataset(out: str):
    dataset = load_dataset(_require(out, "dataset.txt"))
    return dataset.graphs, dataset.feature_names


def _load_run_mapping(out: str):
    structures = loads_patterns(_read(_require(out, "patterns.txt")))
    return loads_mapping_config(_read(_require(out, "mapping.txt")), structures)


def _load_eval_state(out: str):
    """Everything evaluate/explain-instance need: injected ontology, pool,
    mu map, per-graph individuals and predictions."""
    ontology = load_ontology(_require(out, "mapped.ont"))
    pool = _load_pool(_read(_require(out, "pool.tsv")))
    mu = loads_mu(_read(_require(out, "mu.txt")))
    subgraph_ids = _load_subsets(_read(_require(out, "subsets.txt")))
    predictions = _load_predictions(_read(_require(out, "predictions.txt")))
    eta = {gid: f"graph_{gid}" for gid in predictions}
    return inject_pool(ontology, pool), pool, mu, subgraph_ids, predictions, eta


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _cmd_generate(args) -> int:
    spec = SyntheticSpec(num_graphs=args.num_graphs, noise_rate=args.noise, seed=args.seed)
    data = generate(spec)
    _write(_path(args.out, "dataset.txt"), dumps_dataset(data.graphs, data.feature_names))
    save_ontology(data.domain, _path(args.out, "domain.ont"))
    _write(_path(args.out, "patterns.txt"), dumps_patterns(data.mapping.structures))
    _write(_path(args.out, "mapping.txt"), dumps_mapping_config(data.mapping))
    _write(_path(args.out, "annotations.txt"), dumps_annotations(data.annotations))
    print(f"wrote {len(data.graphs)} graphs to {args.out}")
    return 0


def _cmd_train(args) -> int:
    graphs, _ = _load_run_dataset(args.out)
    train_ids, test_ids = split_ids([g.graph_id for g in graphs], args.split, args.seed)
    by_id = {g.graph_id: g for g in graphs}
    config = TrainConfig(hidden_dim=args.hidden, epochs=args.epochs, seed=args.seed)
    model, history = train([by_id[i] for i in train_ids], config)
    predictions = predictions_of(model, graphs)
    train_acc = evaluate_accuracy(model, [by_id[i] for i in train_ids])
    test_acc = evaluate_accuracy(model, [by_id[i] for i in test_ids])
    _write(_path(args.out, "model.txt"), dumps_model(model))
    _write(_path(args.out, "split.txt"), _dump_split(train_ids, test_ids))
    _write(_path(args.out, "predictions.txt"), _dump_predictions(predictions))
    _write(
        _path(args.out, "metrics.txt"),
        f"train_accuracy {train_acc:.4f}\ntest_accuracy {test_acc:.4f}\n"
        f"epochs {args.epochs}\nfinal_loss {history[-1]:.6f}\n",
    )
    print(f"train accuracy {train_acc:.4f}, test accuracy {test_acc:.4f}")
    return 0


def _cmd_explain(args) -> int:
    graphs, _ = _load_run_dataset(args.out)
    model = loads_model(_read(_require(args.out, "model.txt")))
    config = ExplainConfig(
        epochs=args.epochs, threshold=args.mask_threshold, top_k_edges=args.top_k_edges
    )
    masks = {g.graph_id: explain_masks(model, g, config) for g in graphs}
    _write(_path(args.out, "masks.txt"), dumps_masks(masks))
    print(f"wrote masks for {len(masks)} graphs")
    return 0


def _cmd_map(args) -> int:
    graphs, _ = _load_run_dataset(args.out)
    domain = load_ontology(_require(args.out, "domain.ont"))
    mapping = _load_run_mapping(args.out)
    masks = loads_masks(_read(_require(args.out, "masks.txt")))
    missing = [g.graph_id for g in graphs if g.graph_id not in masks]
    if missing:
        raise StageError(f"masks missing for graphs {missing[:5]}; rerun `explain`")
    corpus = build_corpus(graphs, masks, mapping, domain)
    save_ontology(corpus.ontology, _path(args.out, "mapped.ont"))
    save_ontology(corpus.graph_ontology, _path(args.out, "nomask.ont"))
    _write(_path(args.out, "mu.txt"), dumps_mu(corpus.mu))
    _write(_path(args.out, "subsets.txt"), _dump_subsets(corpus.subgraph_ids))
    print(f"mapped {len(graphs)} graphs: {len(corpus.ontology)} axioms")
    return 0


def _cmd_learn_classes(args) -> int:
    ontology = load_ontology(_require(args.out, "mapped.ont"))
    predictions = _load_predictions(_read(_require(args.out, "predictions.txt")))
    eta = {gid: f"graph_{gid}" for gid in predictions}
    eta_sub = {gid: f"graph_{gid}_sub" for gid in predictions}
    config = LearnerConfig(beam_width=args.beam, max_depth=args.max_depth, cutoff=args.cutoff)
    pool: list[ExplainerClass] = []
    for kind in (KIND_INPUT_OUTPUT, KIND_IMPORTANCE):
        for category in sorted(set(predictions.values())):
            pool.extend(
                learn_explainer_classes(
                    ontology, predictions, category, kind, eta, eta_sub, config
                )
            )
    _write(_path(args.out, "pool.tsv"), _dump_pool(pool))
    print(f"learned {len(pool)} explainer classes")
    return 0


def _cmd_explain_instance(args) -> int:
    ontology, pool, mu, subgraph_ids, predictions, eta = _load_eval_state(args.out)
    gid = args.graph_id
    if gid not in predictions:
        raise StageError(f"unknown graph id {gid}")
    explanation = final_explanation(
        ontology, pool, eta[gid], predictions[gid], mu, subgraph_ids[gid]
    )
    rendered = explanation.render() + "\n"
    _write(_path(args.out, "explanations", f"graph_{gid}.txt"), rendered)
    print(rendered, end="")
    return 0


def _cmd_evaluate(args) -> int:
    ontology, pool, mu, subgraph_ids, predictions, eta = _load_eval_state(args.out)
    dataset = load_dataset(_require(args.out, "dataset.txt"))
    labels = {g.graph_id: g.label for g in dataset.graphs}
    explanations = explain_all(ontology, pool, mu, eta, subgraph_ids, predictions)
    for gid, explanation in explanations.items():
        _write(
            _path(args.out, "explanations", f"graph_{gid}.txt"), explanation.render() + "\n"
        )
    report = evaluate(explanations, labels, pool)
    _write(_path(args.out, "evaluation.txt"), report.render() + "\n")
    annotations_path = _path(args.out, "annotations.txt")
    if os.path.exists(annotations_path):
        truths = loads_annotations(_read(annotations_path))
        true_labels = {t.graph_id: t.true_label for t in truths}
        if set(true_labels) >= set(explanations):
            report_true = evaluate(explanations, true_labels, pool)
            _write(_path(args.out, "evaluation_true.txt"), report_true.render() + "\n")
    print(report.render())
    return 0


def _cmd_compare_baselines(args) -> int:
    dataset = load_dataset(_require(args.out, "dataset.txt"))
    labels = {g.graph_id: g.label for g in dataset.graphs}
    train_ids, test_ids = _load_split(_read(_require(args.out, "split.txt")))
    model = loads_model(_read(_require(args.out, "model.txt")))
    by_id = {g.graph_id: g for g in dataset.graphs}
    gnn_acc = evaluate_accuracy(model, [by_id[i] for i in test_ids])
    ontology = load_ontology(_require(args.out, "nomask.ont"))
    eta = {gid: f"graph_{gid}" for gid in labels}
    config = LearnerConfig(beam_width=args.beam, max_depth=args.max_depth, cutoff=args.cutoff)
    baseline = baseline_pure_ill(ontology, labels, eta, train_ids, test_ids, config)
    content = (
        f"gnn_test_accuracy {gnn_acc:.4f}\n"
        f"ill_test_accuracy {baseline.test_accuracy:.4f}\n"
        f"ill_train_accuracy {baseline.train_accuracy:.4f}\n"
        f"ill_classifier {baseline.rendered}\n"
    )
    _write(_path(args.out, "baselines.txt"), content)
    print(content, end="")
    return 0


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ontoexplain",
        description="Train a graph classifier, mask-explain it, translate "
        "graphs into an ontology and learn symbolic explanations.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, func, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--out", default="run", help="run directory (default: run)")
        p.set_defaults(func=func)
        return p

    p = add("generate", _cmd_generate, "write the bundled synthetic dataset")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--num-graphs", type=int, default=200)
    p.add_argument("--noise", type=float, default=0.0, help="label flip probability")

    p = add("train", _cmd_train, "train the graph classifier")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split", type=float, default=0.2, help="test fraction")
    p.add_argument("--epochs", type=int, default=600)
    p.add_argument("--hidden", type=int, default=32)

    p = add("explain", _cmd_explain, "optimize edge/feature masks per graph")
    p.add_argument("--epochs", type=int, default=100)
    p.add_argument("--mask-threshold", type=float, default=0.5)
    p.add_argument("--top-k-edges", type=int, default=6)

    add("map", _cmd_map, "translate graphs and masked subgraphs into the ontology")

    p = add("learn-classes", _cmd_learn_classes, "learn the explainer class pool")
    p.add_argument("--cutoff", type=float, default=0.5)
    p.add_argument("--beam", type=int, default=200)
    p.add_argument("--max-depth", type=int, default=3)

    p = add("explain-instance", _cmd_explain_instance, "explain one graph")
    p.add_argument("graph_id", type=int)

    add("evaluate", _cmd_evaluate, "entailment / fidelity evaluation report")

    p = add("compare-baselines", _cmd_compare_baselines, "model vs symbolic-only classifier")
    p.add_argument("--cutoff", type=float, default=0.5)
    p.add_argument("--beam", type=int, default=200)
    p.add_argument("--max-depth", type=int, default=3)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (StageError, OntologyError, OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
