"""Semantic knowledge-graph engine for laboratory workflow twins.

Elicitation sessions produce structured extraction documents; the
annotator compiles them into deterministic merge plans; plans fold into
a federated, provenance-tagged property graph with canonical bytes and
a content hash; queries read the approved knowledge back out.
"""

from .annotator import (
    EXECUTION_SUBGRAPH,
    MergePlan,
    apply_plan,
    approve_pending,
    compile_seo,
    emit_cypher,
    load_plan,
    plan_to_bytes,
)
from .errors import (
    ArityError,
    CrossSubgraphViolation,
    DanglingEdge,
    MalformedKey,
    NoHedgeDetected,
    RangeError,
    RegistryMismatch,
    Rejected,
    SeoParseError,
    SkgError,
    SubgraphMismatch,
    TypeConflict,
    UnknownField,
    ValueKindMismatch,
)
from .graph_core import (
    Edge,
    Graph,
    Node,
    NodeKey,
    Prop,
    Provenance,
    canonical_serialize,
    digest_path,
    graph_hash,
    load_store,
    neighbors,
    parse_node_key,
    save_store,
    upsert_edge,
    upsert_node,
    value_kind,
    with_edge_pending,
)
from .metrics import (
    compare_extractions,
    f1,
    label_slug,
    load_aliases,
    match_failure_modes,
    normalize_label,
)
from .ontology import (
    REGISTRY_VERSION,
    SchemaRegistry,
    Tier,
    builtin_registry,
    validate_graph,
)
from .queries import (
    automation_reuse,
    cascade_paths,
    elicitation_gaps,
    low_confidence_claims,
    masking_exposures,
    ranked_failures,
    ranked_silent_failures,
    step_decision_points,
    subgraph_stats,
)
from .seo import (
    SeoDocument,
    SessionMode,
    parse_seo,
    score_linguistic,
    serialize_seo,
    validate_seo,
    validate_shelf,
)
from .validation import Issue, ValidationReport

__version__ = "0.1.0"

__all__ = [
    "ArityError",
    "CrossSubgraphViolation",
    "DanglingEdge",
    "Edge",
    "EXECUTION_SUBGRAPH",
    "Graph",
    "Issue",
    "MalformedKey",
    "MergePlan",
    "Node",
    "NodeKey",
    "NoHedgeDetected",
    "Prop",
    "Provenance",
    "RangeError",
    "RegistryMismatch",
    "REGISTRY_VERSION",
    "Rejected",
    "SchemaRegistry",
    "SeoDocument",
    "SeoParseError",
    "SessionMode",
    "SkgError",
    "SubgraphMismatch",
    "Tier",
    "TypeConflict",
    "UnknownField",
    "ValidationReport",
    "ValueKindMismatch",
    "apply_plan",
    "approve_pending",
    "automation_reuse",
    "builtin_registry",
    "canonical_serialize",
    "cascade_paths",
    "compare_extractions",
    "compile_seo",
    "digest_path",
    "elicitation_gaps",
    "emit_cypher",
    "f1",
    "graph_hash",
    "label_slug",
    "load_aliases",
    "load_plan",
    "load_store",
    "low_confidence_claims",
    "masking_exposures",
    "match_failure_modes",
    "neighbors",
    "normalize_label",
    "parse_node_key",
    "parse_seo",
    "plan_to_bytes",
    "ranked_failures",
    "ranked_silent_failures",
    "save_store",
    "score_linguistic",
    "serialize_seo",
    "step_decision_points",
    "subgraph_stats",
    "upsert_edge",
    "upsert_node",
    "validate_graph",
    "value_kind",
    "validate_seo",
    "validate_shelf",
    "with_edge_pending",
]
