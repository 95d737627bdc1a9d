"""Symbolic explanations for graph neural networks.

The package trains a small graph convolutional classifier, distills each
prediction into edge/feature masks, translates graphs and masked subgraphs
into a description-logic ontology, learns class expressions that separate
the model's predicted categories, and audits those classes with minimal
justifications and a fidelity score against the masks.
"""

from .datasets import (
    Dataset,
    GroundTruth,
    SyntheticDataset,
    SyntheticSpec,
    default_mapping_config,
    domain_ontology,
    generate,
    load_dataset,
    save_dataset,
)
from .gnn import (
    GcnModel,
    GraphInstance,
    TrainConfig,
    augment_features_with_structures,
    evaluate_accuracy,
    gcn_forward,
    init_model,
    loads_model,
    predict,
    predict_proba,
    train,
)
from .justify import (
    Justification,
    JustificationSet,
    NotEntailedError,
    enumerate_justifications,
    justify,
    support_individuals,
)
from .learner import (
    Candidate,
    LearnerConfig,
    LearningProblem,
    LearnOutcome,
    learn,
    refine,
    score,
)
from .mapping import (
    FusedRings,
    MappingConfig,
    MotifGraph,
    MuMap,
    Ring,
    StructureMatch,
    extract_structures,
    map_graph,
    map_masked_subgraph,
    mu_apply,
    mu_inverse,
    subgraph_individuals,
)
from .masks import ExplainConfig, MaskPair, apply_masks, explain_masks, full_mask
from .ontology import (
    TOP,
    And,
    Atomic,
    BoolAssertion,
    ClassAssertion,
    EquivalentTo,
    ManchesterParseError,
    Ontology,
    OntologyError,
    Or,
    RoleAssertion,
    Signature,
    Some,
    SubClassOf,
    Top,
    Value,
    canonical,
    expression_length,
    load_ontology,
    loads_ontology,
    merge_ontologies,
    parse_manchester,
    print_axiom,
    print_manchester,
    save_ontology,
)
from .pipeline import (
    BaselineResult,
    EvaluationReport,
    Explanation,
    ExplainerClass,
    KIND_IMPORTANCE,
    KIND_INPUT_OUTPUT,
    baseline_pure_ill,
    build_corpus,
    entail_classes,
    entailment_frequency,
    evaluate,
    explain_all,
    fidelity,
    final_explanation,
    inject_pool,
    learn_explainer_classes,
    predictions_of,
    split_ids,
)
from .reasoner import UnknownNameError, instance_check, retrieval

__all__ = [name for name in dir() if not name.startswith("_")]

__version__ = "0.1.0"
