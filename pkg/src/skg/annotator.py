"""Compiling extraction documents into deterministic graph merge plans.

A merge plan is the reviewable middle step between an elicitation
session and federation state: compile never touches a graph, apply
never looks at a document. Plans are canonical JSON, so the same
document always compiles to the same bytes and a plan can be diffed,
stored, or shipped to another site before being applied.

Referenced-but-unowned records (instruments named as masking assets,
cascade targets nobody described, workflows cited by program inputs)
become schema-default stubs with ``flagged_for_review`` set, so a later
session can confirm them without ever demoting confirmed knowledge.

Cross-subgraph edges always enter the plan pending; they stay
quarantined until an operator approves the convergence.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import Mapping

from .canonical import render_number, render_record
from .errors import RegistryMismatch, Rejected, SubgraphMismatch
from .graph_core import (
    Edge,
    Graph,
    Node,
    NodeKey,
    Prop,
    Provenance,
    parse_node_key,
    upsert_edge,
    upsert_node,
    with_edge_pending,
)
from .metrics import default_aliases, label_slug, normalize_label
from .ontology import SchemaRegistry, builtin_registry
from .seo import SeoDocument, serialize_seo, validate_seo

PLAN_KIND = "merge_plan"
PLAN_VERSION = 1

# instruments and their use cases live in one shared execution subgraph,
# whatever document first mentions them
EXECUTION_SUBGRAPH = "AUTOMATION"

_SD = Provenance.SCHEMA_DEFAULT
_IC = Provenance.INTERVIEW_CONFIRMED


@dataclass(frozen=True)
class NodeStatement:
    key: NodeKey
    properties: Mapping[str, Prop]


@dataclass(frozen=True)
class EdgeStatement:
    edge_type: str
    src: NodeKey
    dst: NodeKey
    pending: bool = False


@dataclass(frozen=True)
class PlanProvenance:
    doc_sha256: str
    source_scientist: str
    session_mode: str
    subgraph: str
    registry_version: str


@dataclass(frozen=True)
class MergePlan:
    provenance: PlanProvenance
    nodes: tuple[NodeStatement, ...]
    edges: tuple[EdgeStatement, ...]
    pending_edges: tuple[EdgeStatement, ...]


class _Builder:
    """Accumulates statements; stubs never displace real statements."""

    def __init__(self):
        self.props: dict[NodeKey, dict[str, Prop]] = {}
        self.is_stub: dict[NodeKey, bool] = {}
        self.edges: dict[tuple[str, NodeKey, NodeKey], bool] = {}

    def node(self, key: NodeKey, props: dict[str, Prop], stub: bool = False) -> NodeKey:
        if key in self.props:
            if not stub:
                if self.is_stub[key]:
                    self.props[key] = dict(props)
                    self.is_stub[key] = False
                else:
                    self.props[key].update(props)
            return key
        self.props[key] = dict(props)
        self.is_stub[key] = stub
        return key

    def edge(self, edge_type: str, src: NodeKey, dst: NodeKey) -> None:
        self.edges[(edge_type, src, dst)] = src.subgraph != dst.subgraph


def _tag(pre_extracted: bool) -> Provenance:
    return _SD if pre_extracted else _IC


def _own_or_default(value: object | None, default: object, pre: bool) -> Prop:
    if value is None:
        return Prop(default, _SD)
    return Prop(value, _tag(pre))


def _fm_stub(name: str) -> dict[str, Prop]:
    return {
        "name": Prop(name, _SD),
        "confidence": Prop(0.60, _SD),
        "confidence_method": Prop("", _SD),
        "source_scientist": Prop("", _SD),
        "silent_failure_risk": Prop(False, _SD),
        "is_critical_path": Prop(False, _SD),
        "flagged_for_review": Prop(True, _SD),
    }


def _named_stub(name: str) -> dict[str, Prop]:
    return {"name": Prop(name, _SD), "flagged_for_review": Prop(True, _SD)}


def _step_stub(step_id: str) -> dict[str, Prop]:
    return {
        "name": Prop(step_id, _SD),
        "step_index": Prop(0, _SD),
        "flagged_for_review": Prop(True, _SD),
    }


def compile_seo(
    doc: SeoDocument,
    subgraph: str,
    registry: SchemaRegistry | None = None,
    aliases: Mapping[str, str] | None = None,
) -> MergePlan:
    """Translate an accepted document into a sorted, deterministic plan.

    Args:
        doc: a parsed extraction document.
        subgraph: namespace the document's claims belong to.
        registry: schema registry; the built-in one when omitted.
        aliases: label alias table for resolving cascade targets named
            informally; the packaged defaults when omitted.

    Raises:
        Rejected: ``validate_seo`` found issues; the report rides along.
        SubgraphMismatch: the protocol layer declares a different subgraph.
    """
    registry = registry or builtin_registry()
    aliases = default_aliases() if aliases is None else aliases
    report = validate_seo(doc)
    if not report.ok:
        raise Rejected(report)
    if doc.protocol is not None and doc.protocol.subgraph != subgraph:
        raise SubgraphMismatch(
            f"document claims subgraph {doc.protocol.subgraph!r}, compiling into {subgraph!r}"
        )

    b = _Builder()
    meta = doc.twin_metadata
    fm_claims: list[tuple] = []  # (claim, node key)
    dp_keys: list[NodeKey] = []
    step_key_by_id: dict[str, NodeKey] = {}

    if doc.protocol is not None:
        proto = doc.protocol
        wf_key = b.node(
            NodeKey(subgraph, "AssayWorkflow", proto.workflow_id),
            {
                "name": Prop(proto.workflow_name, _tag(proto.pre_extracted)),
                "flagged_for_review": Prop(False, _tag(proto.pre_extracted)),
            },
        )
        fm_counter = 0
        ordered = sorted(proto.steps, key=lambda s: s.step_index)
        step_keys: list[NodeKey] = []
        for step in ordered:
            pre = proto.pre_extracted or step.pre_extracted
            step_id = step.id or f"ST-{subgraph}-{int(step.step_index):03d}"
            props = {
                "name": Prop(step.name, _tag(pre)),
                "step_index": Prop(step.step_index, _tag(pre)),
                "is_critical_path": _own_or_default(step.is_critical_path, False, pre),
                "flagged_for_review": Prop(False, _tag(pre)),
            }
            if step.description is not None:
                props["description"] = Prop(step.description, _tag(pre))
            key = b.node(NodeKey(subgraph, "WorkflowStep", step_id), props)
            step_keys.append(key)
            step_key_by_id[step_id] = key
            if step.id is not None:
                step_key_by_id[step.id] = key
            b.edge("HAS_STEP", wf_key, key)

            for uc_name in step.required_use_cases:
                uc_key = b.node(
                    NodeKey(EXECUTION_SUBGRAPH, "UseCase", f"UC-{label_slug(uc_name)}"),
                    _named_stub(uc_name),
                    stub=True,
                )
                b.edge("REQUIRES_AUTOMATION", key, uc_key)

            for fm in step.failure_modes:
                fm_counter += 1
                fm_pre = pre or fm.pre_extracted
                fm_id = fm.id or f"FM-{subgraph}-{fm_counter:03d}"
                fm_props = {
                    "name": Prop(fm.name, _tag(fm_pre)),
                    "confidence": Prop(fm.confidence, _tag(fm_pre)),
                    "confidence_method": Prop(fm.confidence_method, _tag(fm_pre)),
                    "source_scientist": Prop(fm.source_scientist, _tag(fm_pre)),
                    "silent_failure_risk": _own_or_default(
                        fm.silent_failure_risk, False, fm_pre
                    ),
                    "is_critical_path": _own_or_default(fm.is_critical_path, False, fm_pre),
                    "flagged_for_review": _own_or_default(
                        fm.flagged_for_review, False, fm_pre
                    ),
                }
                for opt in ("description", "source_phrase"):
                    value = getattr(fm, opt)
                    if value is not None:
                        fm_props[opt] = Prop(value, _tag(fm_pre))
                for opt in ("frequency_min", "frequency_best", "frequency_max"):
                    value = getattr(fm, opt)
                    if value is not None:
                        fm_props[opt] = Prop(value, _tag(fm_pre))
                fm_key = b.node(NodeKey(subgraph, "FailureMode", fm_id), fm_props)
                fm_claims.append((fm, fm_key))
                b.edge("CAUSES_IF_INCOMPLETE", key, fm_key)

        for prev, nxt in zip(step_keys, step_keys[1:]):
            b.edge("PRECEDES", prev, nxt)

        # second pass: cascade targets may be claimed later in the document
        fm_by_norm = {
            normalize_label(claim.name, aliases): k for claim, k in fm_claims
        }
        for fm, fm_key in fm_claims:
            for target in fm.cascades_to:
                dst = fm_by_norm.get(normalize_label(target, aliases))
                if dst is None:
                    dst = b.node(
                        NodeKey(subgraph, "FailureMode", f"FM-{label_slug(target)}"),
                        _fm_stub(target),
                        stub=True,
                    )
                b.edge("CASCADES_TO", fm_key, dst)
            for asset_name in fm.masked_by_assets:
                asset = b.node(
                    NodeKey(
                        EXECUTION_SUBGRAPH, "AutomationAsset", f"AA-{label_slug(asset_name)}"
                    ),
                    _named_stub(asset_name),
                    stub=True,
                )
                b.edge("MASKED_BY", fm_key, asset)
            for signature in fm.detected_by:
                sig = b.node(
                    NodeKey(subgraph, "ErrorSignature", f"ES-{label_slug(signature)}"),
                    _named_stub(signature),
                    stub=True,
                )
                b.edge("DETECTED_BY", fm_key, sig)

    if doc.decision_model is not None and doc.decision_model.decision_points is not None:
        for n, dp in enumerate(doc.decision_model.decision_points, start=1):
            dp_id = dp.id or f"DP-{subgraph}-{n:03d}"
            step_key = step_key_by_id.get(dp.step_id)
            if step_key is None:
                step_key = b.node(
                    NodeKey(subgraph, "WorkflowStep", dp.step_id),
                    _step_stub(dp.step_id),
                    stub=True,
                )
                step_key_by_id[dp.step_id] = step_key
            props = {
                "condition_type": Prop(dp.condition_type, _IC),
                "threshold_value": Prop(dp.threshold_value, _IC),
                "comparator": Prop(dp.comparator, _IC),
                "units": Prop(dp.units, _IC),
                "pass_action": Prop(dp.pass_action, _IC),
                "fail_action": Prop(dp.fail_action, _IC),
                "escalation_action": Prop(dp.escalation_action, _IC),
                "confidence": Prop(dp.confidence, _IC),
                "confidence_method": Prop(dp.confidence_method, _IC),
                "source_scientist": Prop(dp.source_scientist, _IC),
                "flagged_for_review": Prop(False, _SD),
            }
            if dp.name is not None:
                props["name"] = Prop(dp.name, _IC)
            if dp.source_phrase is not None:
                props["source_phrase"] = Prop(dp.source_phrase, _IC)
            dp_key = b.node(NodeKey(subgraph, "DecisionPoint", dp_id), props)
            dp_keys.append(dp_key)
            b.edge("HAS_DECISION_POINT", step_key, dp_key)

    if doc.method_alternatives is not None:
        for n, ma in enumerate(doc.method_alternatives, start=1):
            step_key = step_key_by_id.get(ma.step_id)
            if step_key is None:
                step_key = b.node(
                    NodeKey(subgraph, "WorkflowStep", ma.step_id),
                    _step_stub(ma.step_id),
                    stub=True,
                )
                step_key_by_id[ma.step_id] = step_key
            props = {
                "name": Prop(ma.name, _IC),
                "flagged_for_review": Prop(False, _IC),
            }
            if ma.description is not None:
                props["description"] = Prop(ma.description, _IC)
            if ma.tradeoff is not None:
                props["tradeoff"] = Prop(ma.tradeoff, _IC)
            ma_key = b.node(
                NodeKey(subgraph, "MethodAlternative", f"MA-{subgraph}-{n:03d}"), props
            )
            b.edge("HAS_ALTERNATIVE", step_key, ma_key)

    if doc.automation_context is not None:
        for claim in doc.automation_context:
            props = {
                "name": Prop(claim.asset_name, _IC),
                "flagged_for_review": Prop(False, _IC),
            }
            if claim.log_scope is not None:
                props["log_scope"] = Prop(claim.log_scope, _IC)
            asset = b.node(
                NodeKey(
                    EXECUTION_SUBGRAPH,
                    "AutomationAsset",
                    f"AA-{label_slug(claim.asset_name)}",
                ),
                props,
            )
            for uc_name in claim.use_case_names:
                uc_key = b.node(
                    NodeKey(EXECUTION_SUBGRAPH, "UseCase", f"UC-{label_slug(uc_name)}"),
                    {"name": Prop(uc_name, _IC), "flagged_for_review": Prop(False, _IC)},
                )
                b.edge("SUITABLE_FOR", uc_key, asset)

    if doc.strategic is not None and doc.strategic.program_milestones is not None:
        ei_counter = 0
        for n, pm in enumerate(doc.strategic.program_milestones, start=1):
            pm_key = b.node(
                NodeKey(subgraph, "ProgramMilestone", pm.id or f"PM-{subgraph}-{n:03d}"),
                {"name": Prop(pm.name, _IC), "flagged_for_review": Prop(False, _IC)},
            )
            for ei in pm.evidentiary_inputs:
                ei_counter += 1
                ei_key = b.node(
                    NodeKey(
                        subgraph, "EvidentiaryInput", ei.id or f"EI-{subgraph}-{ei_counter:03d}"
                    ),
                    {
                        "name": Prop(ei.name, _IC),
                        "required_output": Prop(ei.required_output, _IC),
                        "quality_threshold": Prop(ei.quality_threshold, _IC),
                        "decision_consequence": Prop(ei.decision_consequence, _IC),
                        "flagged_for_review": Prop(False, _IC),
                    },
                )
                b.edge("REQUIRES_EVIDENCE", pm_key, ei_key)
                if ei.sourced_from_subgraph is not None:
                    wf = b.node(
                        NodeKey(
                            ei.sourced_from_subgraph,
                            "AssayWorkflow",
                            ei.sourced_from_workflow_id,
                        ),
                        _named_stub(ei.sourced_from_workflow_id),
                        stub=True,
                    )
                    b.edge("SOURCED_FROM", ei_key, wf)

    doc_sha = hashlib.sha256(serialize_seo(doc)).hexdigest()

    if fm_claims or dp_keys:
        all_methods = [c.confidence_method for c, _ in fm_claims]
        if doc.decision_model is not None and doc.decision_model.decision_points:
            all_methods += [dp.confidence_method for dp in doc.decision_model.decision_points]
        cal_props = {
            "methods_used": Prop(tuple(sorted(set(all_methods))), _IC),
            "n_claims": Prop(len(fm_claims) + len(dp_keys), _IC),
            "n_linguistic": Prop(
                sum(1 for m in all_methods if m == "linguistic_approximation"), _IC
            ),
            "n_shelf": Prop(sum(1 for m in all_methods if m == "SHELF_elicited"), _IC),
            "source_scientist": Prop(meta.source_scientist, _IC),
            "session_mode": Prop(doc.session_mode.value, _IC),
        }
        if meta.session_date is not None:
            cal_props["session_date"] = Prop(meta.session_date, _IC)
        if meta.calibration_status is not None:
            cal_props["calibration_status"] = Prop(meta.calibration_status, _IC)
        cal_key = b.node(
            NodeKey(subgraph, "CalibrationRecord", f"CAL-{subgraph}-{doc_sha[:8]}"), cal_props
        )
        for _, fm_key in fm_claims:
            b.edge("CALIBRATED_BY", fm_key, cal_key)
        for dp_key in dp_keys:
            b.edge("CALIBRATED_BY", dp_key, cal_key)

    nodes = tuple(
        NodeStatement(key, dict(b.props[key])) for key in sorted(b.props)
    )
    approved = []
    pending = []
    for (edge_type, src, dst), is_pending in b.edges.items():
        stmt = EdgeStatement(edge_type, src, dst, pending=is_pending)
        (pending if is_pending else approved).append(stmt)
    def order(stmt: EdgeStatement):
        return (stmt.edge_type, stmt.src, stmt.dst)

    return MergePlan(
        provenance=PlanProvenance(
            doc_sha256=doc_sha,
            source_scientist=(meta.source_scientist if meta else "") or "",
            session_mode=doc.session_mode.value,
            subgraph=subgraph,
            registry_version=registry.version,
        ),
        nodes=nodes,
        edges=tuple(sorted(approved, key=order)),
        pending_edges=tuple(sorted(pending, key=order)),
    )


# -- plan serialization -------------------------------------------------


def _prop_jsonable(prop: Prop) -> dict:
    value = list(prop.value) if isinstance(prop.value, tuple) else prop.value
    return {"provenance": prop.provenance.value, "value": value}


def plan_to_jsonable(plan: MergePlan) -> dict:
    statements: list[dict] = []
    for stmt in plan.nodes:
        statements.append(
            {
                "kind": "node",
                "subgraph": stmt.key.subgraph,
                "label": stmt.key.label,
                "id": stmt.key.id,
                "properties": {n: _prop_jsonable(p) for n, p in stmt.properties.items()},
            }
        )
    for stmt in plan.edges:
        statements.append(
            {
                "kind": "edge",
                "edge_type": stmt.edge_type,
                "src": stmt.src.to_text(),
                "dst": stmt.dst.to_text(),
            }
        )
    return {
        "kind": PLAN_KIND,
        "version": PLAN_VERSION,
        "provenance": {
            "doc_sha256": plan.provenance.doc_sha256,
            "source_scientist": plan.provenance.source_scientist,
            "session_mode": plan.provenance.session_mode,
            "subgraph": plan.provenance.subgraph,
            "registry_version": plan.provenance.registry_version,
        },
        "statements": statements,
        "pending_edges": [
            {
                "kind": "pending_edge",
                "edge_type": stmt.edge_type,
                "src": stmt.src.to_text(),
                "dst": stmt.dst.to_text(),
            }
            for stmt in plan.pending_edges
        ],
    }


def plan_to_bytes(plan: MergePlan) -> bytes:
    return (render_record(plan_to_jsonable(plan)) + "\n").encode("utf-8")


def _reject_plan_constant(literal: str):
    raise ValueError(f"non-finite number literal: {literal}")


def load_plan(data: bytes | str) -> MergePlan:
    """Rebuild a plan from its canonical JSON; inverse of plan_to_bytes."""
    raw = json.loads(
        data if isinstance(data, str) else data.decode("utf-8"),
        parse_constant=_reject_plan_constant,
    )
    if not isinstance(raw, dict) or raw.get("kind") != PLAN_KIND:
        raise ValueError("not a merge plan document")
    if raw.get("version") != PLAN_VERSION:
        raise ValueError(f"unsupported plan version {raw.get('version')!r}")
    prov = raw["provenance"]
    nodes: list[NodeStatement] = []
    edges: list[EdgeStatement] = []
    for record in raw["statements"]:
        if record["kind"] == "node":
            key = NodeKey(record["subgraph"], record["label"], record["id"])
            props = {
                name: Prop(
                    tuple(rec["value"]) if isinstance(rec["value"], list) else rec["value"],
                    Provenance(rec["provenance"]),
                )
                for name, rec in record["properties"].items()
            }
            nodes.append(NodeStatement(key, props))
        elif record["kind"] == "edge":
            edges.append(
                EdgeStatement(
                    record["edge_type"],
                    parse_node_key(record["src"]),
                    parse_node_key(record["dst"]),
                )
            )
        else:
            raise ValueError(f"unknown statement kind {record['kind']!r}")
    pending = tuple(
        EdgeStatement(
            rec["edge_type"],
            parse_node_key(rec["src"]),
            parse_node_key(rec["dst"]),
            pending=True,
        )
        for rec in raw["pending_edges"]
    )
    return MergePlan(
        provenance=PlanProvenance(
            doc_sha256=prov["doc_sha256"],
            source_scientist=prov["source_scientist"],
            session_mode=prov["session_mode"],
            subgraph=prov["subgraph"],
            registry_version=prov["registry_version"],
        ),
        nodes=tuple(nodes),
        edges=tuple(edges),
        pending_edges=pending,
    )


# -- applying and approving ---------------------------------------------


def apply_plan(graph: Graph, plan: MergePlan) -> Graph:
    """Merge a plan into a graph snapshot; returns the merged snapshot.

    Applying the same plan twice is a no-op the second time, and an
    approved cross-subgraph edge is never re-quarantined by re-applying
    the plan that introduced it.

    Raises:
        RegistryMismatch: the plan was compiled under another registry.
    """
    if plan.provenance.registry_version != graph.registry_version:
        raise RegistryMismatch(
            f"plan compiled under {plan.provenance.registry_version!r}, "
            f"graph runs {graph.registry_version!r}"
        )
    for stmt in plan.nodes:
        graph = upsert_node(graph, Node(stmt.key, stmt.properties))
    for stmt in plan.edges:
        graph = upsert_edge(graph, Edge(stmt.edge_type, stmt.src, stmt.dst))
    for stmt in plan.pending_edges:
        graph = upsert_edge(graph, Edge(stmt.edge_type, stmt.src, stmt.dst, pending=True))
    return graph


def approve_pending(
    graph: Graph,
    selectors: list[tuple[str, NodeKey, NodeKey]] | None = None,
) -> tuple[Graph, tuple[tuple[str, NodeKey, NodeKey], ...]]:
    """Approve pending cross-subgraph edges; None means approve them all.

    Returns the converged graph and the keys that were approved, sorted.

    Raises:
        KeyError: a selector names an edge that is absent or already
            approved (strictness keeps approval scripts honest).
    """
    if selectors is None:
        keys = [e.key for e in graph.pending_edges()]
    else:
        keys = []
        for key in selectors:
            if not graph.has_edge(key):
                raise KeyError(f"no such edge: {key[0]} {key[1].to_text()} -> {key[2].to_text()}")
            if not graph.edge(key).pending:
                raise KeyError(
                    f"not pending: {key[0]} {key[1].to_text()} -> {key[2].to_text()}"
                )
            keys.append(key)
    for key in keys:
        graph = with_edge_pending(graph, key, False)
    return graph, tuple(sorted(keys, key=lambda k: (k[0], k[1], k[2])))


# -- graph-database export ----------------------------------------------


def _cypher_text(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def _cypher_value(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return render_number(value)
    if isinstance(value, str):
        return _cypher_text(value)
    if isinstance(value, tuple):
        return "[" + ", ".join(_cypher_value(v) for v in value) + "]"
    raise TypeError(f"unsupported value in plan: {type(value).__name__}")


def _cypher_anchor(var: str, key: NodeKey) -> str:
    return (
        f"({var}:{key.label} {{subgraph:{_cypher_text(key.subgraph)}, "
        f"id:{_cypher_text(key.id)}}})"
    )


def _edge_line(stmt: EdgeStatement) -> str:
    line = (
        f"MATCH {_cypher_anchor('a', stmt.src)}, {_cypher_anchor('b', stmt.dst)} "
        f"MERGE (a)-[r:{stmt.edge_type}]->(b)"
    )
    if stmt.pending:
        line += " SET r.pending = true"
    return line + ";"


def emit_cypher(plan: MergePlan) -> str:
    """Render a plan as idempotent graph-database statements.

    Property provenance tags do not survive the export; the plan file
    stays the system of record.
    """
    lines: list[str] = []
    for stmt in plan.nodes:
        sets = ", ".join(
            f"n.{name} = {_cypher_value(stmt.properties[name].value)}"
            for name in sorted(stmt.properties)
        )
        anchor = f"MERGE {_cypher_anchor('n', stmt.key)}"
        lines.append(f"{anchor} SET {sets};" if sets else f"{anchor};")
    for stmt in plan.edges:
        lines.append(_edge_line(stmt))
    if plan.pending_edges:
        lines.append("// PENDING CONVERGENCE")
        for stmt in plan.pending_edges:
            lines.append(_edge_line(stmt))
    if not lines:
        return ""
    return "\n".join(lines) + "\n"
