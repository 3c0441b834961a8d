"""Three-tier schema registry and graph-level validation.

Tier 1 holds program-level planning context, tier 2 the protocol
knowledge elicited from scientists, tier 3 the physical execution
layer (instruments, their use cases, and log signatures). The edge
vocabulary splits into the core failure-mode relations and the
structural plumbing needed to make the graph navigable; the registry
records which is which.

Registry objects are immutable; validation never mutates the graph and
reports a deterministically ordered issue list.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Mapping

from .graph_core import Graph, Node, value_kind
from .validation import IssueCollector, ValidationReport

REGISTRY_VERSION = "skg-ontology-1"

CONFIDENCE_FLOOR = 0.60
CONFIDENCE_CEILING = 1.00

COMPARATORS = ("<", "<=", ">", ">=", "==", "within_range")

CONFIDENCE_METHODS = ("linguistic_approximation", "SHELF_elicited")


class Tier(Enum):
    TIER1_PROGRAM = 1
    TIER2_PROTOCOL = 2
    TIER3_EXECUTION = 3


@dataclass(frozen=True)
class NodeTypeDef:
    label: str
    tier: Tier
    required: tuple[tuple[str, str], ...] = ()
    optional: tuple[tuple[str, str], ...] = ()

    def declared_kinds(self) -> dict[str, str]:
        return dict(self.required) | dict(self.optional)


@dataclass(frozen=True)
class EdgeTypeDef:
    name: str
    src_labels: frozenset[str]
    dst_labels: frozenset[str]
    cross_tier: bool = False
    cross_subgraph_allowed: bool = False
    core: bool = False  # core failure-mode vocabulary vs structural plumbing


@dataclass(frozen=True)
class SchemaRegistry:
    version: str
    node_types: Mapping[str, NodeTypeDef]
    edge_types: Mapping[str, EdgeTypeDef]

    def __post_init__(self):
        object.__setattr__(self, "node_types", dict(self.node_types))
        object.__setattr__(self, "edge_types", dict(self.edge_types))
        for edef in self.edge_types.values():
            unknown = (edef.src_labels | edef.dst_labels) - set(self.node_types)
            if unknown:
                raise ValueError(f"{edef.name} references unknown labels {sorted(unknown)}")

    def tier_of(self, label: str) -> Tier:
        return self.node_types[label].tier

    def cross_subgraph_edge_types(self) -> frozenset[str]:
        return frozenset(
            name for name, edef in self.edge_types.items() if edef.cross_subgraph_allowed
        )

    def core_edge_types(self) -> frozenset[str]:
        return frozenset(name for name, edef in self.edge_types.items() if edef.core)


_MANDATORY_TRIO = (
    ("confidence", "number"),
    ("confidence_method", "text"),
    ("source_scientist", "text"),
)

_TIER2_LABELS = (
    "AssayWorkflow",
    "WorkflowStep",
    "DecisionPoint",
    "FailureMode",
    "MethodAlternative",
    "AmbiguityFlag",
    "CalibrationRecord",
)


@lru_cache(maxsize=1)
def builtin_registry() -> SchemaRegistry:
    """The built-in lab-workflow registry (12 node labels, 14 edge types)."""
    t1, t2, t3 = Tier.TIER1_PROGRAM, Tier.TIER2_PROTOCOL, Tier.TIER3_EXECUTION
    node_types = [
        NodeTypeDef(
            "ProgramMilestone",
            t1,
            required=(("name", "text"),),
            optional=(("description", "text"), ("flagged_for_review", "boolean")),
        ),
        NodeTypeDef(
            "EvidentiaryInput",
            t1,
            required=(
                ("name", "text"),
                ("required_output", "text"),
                ("quality_threshold", "text"),
                ("decision_consequence", "text"),
            ),
            optional=(("flagged_for_review", "boolean"),),
        ),
        NodeTypeDef(
            "AssayWorkflow",
            t2,
            required=(("name", "text"),),
            optional=(("description", "text"), ("flagged_for_review", "boolean")),
        ),
        NodeTypeDef(
            "WorkflowStep",
            t2,
            required=(("name", "text"), ("step_index", "number")),
            optional=(
                ("description", "text"),
                ("is_critical_path", "boolean"),
                ("flagged_for_review", "boolean"),
            ),
        ),
        NodeTypeDef(
            "DecisionPoint",
            t2,
            required=_MANDATORY_TRIO
            + (
                ("condition_type", "text"),
                ("threshold_value", "number"),
                ("comparator", "text"),
                ("units", "text"),
                ("pass_action", "text"),
                ("fail_action", "text"),
                ("escalation_action", "text"),
            ),
            optional=(
                ("name", "text"),
                ("source_phrase", "text"),
                ("flagged_for_review", "boolean"),
            ),
        ),
        NodeTypeDef(
            "FailureMode",
            t2,
            required=_MANDATORY_TRIO
            + (
                ("name", "text"),
                ("silent_failure_risk", "boolean"),
                ("is_critical_path", "boolean"),
                ("flagged_for_review", "boolean"),
            ),
            optional=(
                ("description", "text"),
                ("source_phrase", "text"),
                ("frequency_min", "number"),
                ("frequency_best", "number"),
                ("frequency_max", "number"),
            ),
        ),
        NodeTypeDef(
            "MethodAlternative",
            t2,
            required=(("name", "text"),),
            optional=(
                ("description", "text"),
                ("tradeoff", "text"),
                ("flagged_for_review", "boolean"),
            ),
        ),
        NodeTypeDef(
            "AmbiguityFlag",
            t2,
            required=(("name", "text"),),
            optional=(("description", "text"), ("flagged_for_review", "boolean")),
        ),
        NodeTypeDef(
            "CalibrationRecord",
            t2,
            required=(("methods_used", "text_list"),),
            optional=(
                ("n_claims", "number"),
                ("n_linguistic", "number"),
                ("n_shelf", "number"),
                ("source_scientist", "text"),
                ("session_date", "text"),
                ("calibration_status", "text"),
                ("session_mode", "text"),
                ("flagged_for_review", "boolean"),
            ),
        ),
        NodeTypeDef(
            "AutomationAsset",
            t3,
            required=(("name", "text"),),
            optional=(("log_scope", "text"), ("flagged_for_review", "boolean")),
        ),
        NodeTypeDef(
            "UseCase",
            t3,
            required=(("name", "text"),),
            optional=(("description", "text"), ("flagged_for_review", "boolean")),
        ),
        NodeTypeDef(
            "ErrorSignature",
            t3,
            required=(("name", "text"),),
            optional=(("description", "text"), ("flagged_for_review", "boolean")),
        ),
    ]
    f = frozenset
    t2_all = f(_TIER2_LABELS)
    edge_types = [
        # core vocabulary
        EdgeTypeDef(
            "SOURCED_FROM",
            f({"EvidentiaryInput"}),
            f({"AssayWorkflow"}),
            cross_tier=True,
            cross_subgraph_allowed=True,
            core=True,
        ),
        EdgeTypeDef(
            "CAUSES_IF_INCOMPLETE",
            f({"WorkflowStep"}),
            f({"FailureMode"}),
            core=True,
        ),
        EdgeTypeDef(
            "MASKED_BY",
            f({"FailureMode"}),
            f({"AutomationAsset"}),
            cross_tier=True,
            cross_subgraph_allowed=True,
            core=True,
        ),
        EdgeTypeDef(
            "REQUIRES_AUTOMATION",
            f({"WorkflowStep"}),
            f({"UseCase"}),
            cross_tier=True,
            cross_subgraph_allowed=True,
            core=True,
        ),
        EdgeTypeDef(
            "SUITABLE_FOR",
            f({"UseCase"}),
            f({"AutomationAsset"}),
            core=True,
        ),
        # structural plumbing
        EdgeTypeDef("REQUIRES_EVIDENCE", f({"ProgramMilestone"}), f({"EvidentiaryInput"})),
        EdgeTypeDef("HAS_STEP", f({"AssayWorkflow"}), f({"WorkflowStep"})),
        EdgeTypeDef("PRECEDES", f({"WorkflowStep"}), f({"WorkflowStep"})),
        EdgeTypeDef("HAS_DECISION_POINT", f({"WorkflowStep"}), f({"DecisionPoint"})),
        EdgeTypeDef("CASCADES_TO", f({"FailureMode"}), f({"FailureMode"})),
        EdgeTypeDef("DETECTED_BY", f({"FailureMode"}), f({"ErrorSignature"}), cross_tier=True),
        EdgeTypeDef("HAS_ALTERNATIVE", f({"WorkflowStep"}), f({"MethodAlternative"})),
        EdgeTypeDef("FLAGS", f({"AmbiguityFlag"}), t2_all - {"AmbiguityFlag"}),
        EdgeTypeDef(
            "CALIBRATED_BY", f({"FailureMode", "DecisionPoint"}), f({"CalibrationRecord"})
        ),
    ]
    return SchemaRegistry(
        REGISTRY_VERSION,
        {n.label: n for n in node_types},
        {e.name: e for e in edge_types},
    )


def _check_shelf_triple(node: Node, out: IssueCollector) -> None:
    values = [node.get(f"frequency_{part}") for part in ("min", "best", "max")]
    present = [v for v in values if v is not None]
    if not present:
        return
    if len(present) < 3:
        out.add(
            "ShelfOrderViolation",
            node.key.to_text(),
            "incomplete frequency triple (need min, best, max)",
        )
        return
    fmin, fbest, fmax = values
    if not (fmin <= fbest <= fmax):
        out.add(
            "ShelfOrderViolation",
            node.key.to_text(),
            f"frequency triple unordered: {fmin} <= {fbest} <= {fmax} fails",
        )


def validate_graph(graph: Graph, registry: SchemaRegistry) -> ValidationReport:
    """Check every node and edge against the registry; graph is untouched.

    Issue codes: UnknownLabel, UnknownEdgeType, EndpointLabelViolation,
    MissingRequiredProperty, ValueKindMismatch, ConfidenceOutOfRange,
    ShelfOrderViolation, CrossSubgraphViolation, TierViolation.
    """
    out = IssueCollector()
    for node in graph.nodes():
        where = node.key.to_text()
        ndef = registry.node_types.get(node.key.label)
        if ndef is None:
            out.add("UnknownLabel", where, f"label {node.key.label} not in registry")
            continue
        declared = ndef.declared_kinds()
        for name, kind in ndef.required:
            if name not in node.properties:
                out.add("MissingRequiredProperty", where, f"{name} ({kind}) is required")
        for name in sorted(node.properties):
            expected = declared.get(name)
            if expected is None:
                continue  # undeclared domain properties may coexist
            actual = value_kind(node.properties[name].value)
            if actual != expected:
                out.add(
                    "ValueKindMismatch", where, f"{name}: expected {expected}, got {actual}"
                )
        confidence = node.get("confidence")
        if isinstance(confidence, (int, float)) and not isinstance(confidence, bool):
            if not CONFIDENCE_FLOOR <= confidence <= CONFIDENCE_CEILING:
                out.add(
                    "ConfidenceOutOfRange",
                    where,
                    f"confidence {confidence} outside [{CONFIDENCE_FLOOR}, {CONFIDENCE_CEILING}]",
                )
        _check_shelf_triple(node, out)
    for edge in graph.edges():
        where = f"{edge.edge_type}[{edge.src.to_text()} -> {edge.dst.to_text()}]"
        edef = registry.edge_types.get(edge.edge_type)
        if edef is None:
            out.add("UnknownEdgeType", where, f"edge type {edge.edge_type} not in registry")
            continue
        src_ok = edge.src.label in edef.src_labels
        dst_ok = edge.dst.label in edef.dst_labels
        if not src_ok or not dst_ok:
            out.add(
                "EndpointLabelViolation",
                where,
                f"allowed {sorted(edef.src_labels)} -> {sorted(edef.dst_labels)}",
            )
        if edge.src.subgraph != edge.dst.subgraph and not edef.cross_subgraph_allowed:
            out.add(
                "CrossSubgraphViolation",
                where,
                f"{edge.src.subgraph} -> {edge.dst.subgraph} not allowed for this type",
            )
        if not edef.cross_tier and src_ok and dst_ok:
            src_tier = registry.tier_of(edge.src.label)
            dst_tier = registry.tier_of(edge.dst.label)
            if src_tier is not dst_tier:
                out.add(
                    "TierViolation",
                    where,
                    f"within-tier edge spans {src_tier.name} -> {dst_tier.name}",
                )
    return out.report()


def schema_listing(registry: SchemaRegistry) -> str:
    """Human-readable registry dump for the CLI ``schema`` subcommand."""
    lines = [f"registry {registry.version}", "", "node types:"]
    by_tier: dict[Tier, list[NodeTypeDef]] = {}
    for ndef in registry.node_types.values():
        by_tier.setdefault(ndef.tier, []).append(ndef)
    for tier in Tier:
        lines.append(f"  {tier.name}:")
        for ndef in sorted(by_tier.get(tier, []), key=lambda d: d.label):
            req = ", ".join(f"{n}:{k}" for n, k in ndef.required) or "-"
            opt = ", ".join(f"{n}:{k}" for n, k in ndef.optional) or "-"
            lines.append(f"    {ndef.label}")
            lines.append(f"      required: {req}")
            lines.append(f"      optional: {opt}")
    lines.append("")
    lines.append("edge types:")
    for name in sorted(registry.edge_types):
        edef = registry.edge_types[name]
        flags = []
        flags.append("cross-tier" if edef.cross_tier else "within-tier")
        flags.append(
            "cross-subgraph" if edef.cross_subgraph_allowed else "within-subgraph"
        )
        flags.append("core" if edef.core else "plumbing")
        lines.append(
            f"  {name}: {'|'.join(sorted(edef.src_labels))} -> "
            f"{'|'.join(sorted(edef.dst_labels))} [{', '.join(flags)}]"
        )
    return "\n".join(lines) + "\n"
