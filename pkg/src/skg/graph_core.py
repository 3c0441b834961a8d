"""Embedded typed property graph with canonical serialization and hashing.

Graphs are immutable snapshots: every mutation helper returns a new
``Graph`` and never touches its input, so callers can hold multiple
versions of federation state at once. Canonical serialization emits
newline-delimited JSON in a fixed order (header, nodes, approved edges,
pending edges), which makes byte equality the definition of graph
equality and gives a stable SHA-256 content hash.

Provenance-aware merge policy, applied per property on re-upsert:

* an INTERVIEW_CONFIRMED value always overwrites;
* a SCHEMA_DEFAULT value applies only if the property is absent or
  currently SCHEMA_DEFAULT;
* a confirmed-vs-confirmed collision with a different value is
  last-write-wins plus an appended entry in the record-level
  ``conflict_log`` list property.

Pending edges model cross-subgraph references that have not been
approved yet: re-upserting an approved edge never re-quarantines it.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Mapping, Protocol

from .canonical import normalize_number, render_number, render_record
from .errors import (
    CrossSubgraphViolation,
    DanglingEdge,
    MalformedKey,
    RegistryMismatch,
    TypeConflict,
)

FORMAT_NAME = "skg.jsonl"
FORMAT_VERSION = 1
CONFLICT_LOG = "conflict_log"

_ID_RE = re.compile(r"^[A-Za-z0-9_-]+$")


class Provenance(str, Enum):
    SCHEMA_DEFAULT = "SCHEMA_DEFAULT"
    INTERVIEW_CONFIRMED = "INTERVIEW_CONFIRMED"


class RegistryInfo(Protocol):
    """What the graph needs to know about its schema registry."""

    @property
    def version(self) -> str: ...

    def cross_subgraph_edge_types(self) -> frozenset[str]: ...


def value_kind(value: object) -> str:
    """Classify a property value; raises TypeError for unsupported kinds."""
    if isinstance(value, bool):
        return "boolean"
    if isinstance(value, (int, float)):
        return "number"
    if isinstance(value, str):
        return "text"
    if isinstance(value, (tuple, list)):
        return "text_list"
    raise TypeError(f"unsupported property value: {type(value).__name__}")


@dataclass(frozen=True, order=True)
class NodeKey:
    """Namespaced node identity: (subgraph, label, id)."""

    subgraph: str
    label: str
    id: str

    def __post_init__(self):
        if not self.subgraph or not self.label or not self.id:
            raise MalformedKey(f"empty key part in {self!r}")
        if not _ID_RE.match(self.id):
            raise MalformedKey(f"id {self.id!r} outside [A-Za-z0-9_-]+")

    def to_text(self) -> str:
        return f"{self.subgraph}:{self.label}:{self.id}"


def parse_node_key(text: str) -> NodeKey:
    parts = text.split(":")
    if len(parts) != 3:
        raise MalformedKey(f"expected subgraph:Label:id, got {text!r}")
    return NodeKey(*parts)


@dataclass(frozen=True)
class Prop:
    """A single property value with its provenance tag.

    Numbers are quantized to the canonical decimal at construction so
    that float equality and canonical-byte equality coincide.
    """

    value: object
    provenance: Provenance = Provenance.INTERVIEW_CONFIRMED

    def __post_init__(self):
        v = self.value
        if isinstance(v, list):
            v = tuple(v)
            object.__setattr__(self, "value", v)
        kind = value_kind(v)
        if kind == "number":
            object.__setattr__(self, "value", normalize_number(v))
        elif kind == "text_list":
            if not all(isinstance(item, str) for item in v):
                raise TypeError("text_list items must be text")
        if not isinstance(self.provenance, Provenance):
            object.__setattr__(self, "provenance", Provenance(self.provenance))

    @property
    def kind(self) -> str:
        return value_kind(self.value)


@dataclass(frozen=True)
class Node:
    key: NodeKey
    properties: Mapping[str, Prop] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "properties", dict(self.properties))

    def get(self, name: str, default: object = None) -> object:
        prop = self.properties.get(name)
        return default if prop is None else prop.value


@dataclass(frozen=True)
class Edge:
    edge_type: str
    src: NodeKey
    dst: NodeKey
    properties: Mapping[str, Prop] = field(default_factory=dict)
    pending: bool = False

    def __post_init__(self):
        object.__setattr__(self, "properties", dict(self.properties))

    @property
    def key(self) -> tuple[str, NodeKey, NodeKey]:
        return (self.edge_type, self.src, self.dst)


class Graph:
    """Immutable graph snapshot bound to one schema registry version."""

    __slots__ = ("registry_version", "_cross_types", "_nodes", "_edges")

    def __init__(
        self,
        registry: RegistryInfo | None = None,
        *,
        registry_version: str | None = None,
        cross_subgraph_types: frozenset[str] | None = None,
        _nodes: dict | None = None,
        _edges: dict | None = None,
    ):
        if registry is not None:
            registry_version = registry.version
            cross_subgraph_types = registry.cross_subgraph_edge_types()
        if registry_version is None or cross_subgraph_types is None:
            raise ValueError("a registry (or its version and cross-type set) is required")
        self.registry_version = registry_version
        self._cross_types = cross_subgraph_types
        self._nodes: dict[NodeKey, Node] = _nodes if _nodes is not None else {}
        self._edges: dict[tuple, Edge] = _edges if _edges is not None else {}

    # -- read access ---------------------------------------------------

    def node(self, key: NodeKey) -> Node:
        return self._nodes[key]

    def has_node(self, key: NodeKey) -> bool:
        return key in self._nodes

    def has_subgraph(self, subgraph: str) -> bool:
        return any(k.subgraph == subgraph for k in self._nodes)

    def nodes(self, label: str | None = None, subgraph: str | None = None) -> list[Node]:
        out = [
            n
            for k, n in self._nodes.items()
            if (label is None or k.label == label)
            and (subgraph is None or k.subgraph == subgraph)
        ]
        out.sort(key=lambda n: n.key)
        return out

    def edges(
        self, edge_type: str | None = None, include_pending: bool = True
    ) -> list[Edge]:
        out = [
            e
            for e in self._edges.values()
            if (edge_type is None or e.edge_type == edge_type)
            and (include_pending or not e.pending)
        ]
        out.sort(key=lambda e: e.key)
        return out

    def pending_edges(self) -> list[Edge]:
        return sorted(
            (e for e in self._edges.values() if e.pending), key=lambda e: e.key
        )

    def edge(self, key: tuple[str, NodeKey, NodeKey]) -> Edge:
        return self._edges[key]

    def has_edge(self, key: tuple[str, NodeKey, NodeKey]) -> bool:
        return key in self._edges

    @property
    def node_count(self) -> int:
        return len(self._nodes)

    @property
    def edge_count(self) -> int:
        return len(self._edges)

    def _replace(self, nodes: dict | None = None, edges: dict | None = None) -> "Graph":
        return Graph(
            registry_version=self.registry_version,
            cross_subgraph_types=self._cross_types,
            _nodes=self._nodes if nodes is None else nodes,
            _edges=self._edges if edges is None else edges,
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Graph):
            return NotImplemented
        return (
            self.registry_version == other.registry_version
            and self._nodes == other._nodes
            and self._edges == other._edges
        )

    def __hash__(self):  # graphs are not hashable values; use graph_hash()
        raise TypeError("use graph_hash() for content identity")


def _merge_properties(
    existing: Mapping[str, Prop], incoming: Mapping[str, Prop], subject: str
) -> dict[str, Prop]:
    """Apply the provenance merge policy; returns a fresh property dict.

    Raises:
        TypeConflict: incoming value kind differs from the stored kind,
            regardless of whether the policy would keep the new value.
    """
    merged = dict(existing)
    conflicts: list[str] = []
    for name in sorted(incoming):
        new = incoming[name]
        old = merged.get(name)
        if old is None:
            merged[name] = new
            continue
        if old.kind != new.kind:
            raise TypeConflict(
                f"{subject}.{name}: kind {old.kind} cannot merge with {new.kind}"
            )
        if new.provenance is Provenance.SCHEMA_DEFAULT:
            if old.provenance is Provenance.SCHEMA_DEFAULT:
                merged[name] = new
            continue  # a default never displaces confirmed knowledge
        if old.provenance is Provenance.INTERVIEW_CONFIRMED and old.value != new.value:
            conflicts.append(f"{name}: {_render_simple(old.value)} -> {_render_simple(new.value)}")
        merged[name] = new
    if conflicts:
        log = merged.get(CONFLICT_LOG)
        entries = tuple(log.value) if log is not None else ()
        merged[CONFLICT_LOG] = Prop(entries + tuple(conflicts), Provenance.INTERVIEW_CONFIRMED)
    return merged


def _render_simple(value: object) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return render_number(value)
    if isinstance(value, tuple):
        return "[" + ", ".join(value) + "]"
    return str(value)


def upsert_node(graph: Graph, node: Node) -> Graph:
    """Insert a node or merge its properties under the provenance policy."""
    existing = graph._nodes.get(node.key)
    if existing is None:
        merged = Node(node.key, dict(node.properties))
    else:
        merged = Node(
            node.key, _merge_properties(existing.properties, node.properties, node.key.to_text())
        )
    nodes = dict(graph._nodes)
    nodes[node.key] = merged
    return graph._replace(nodes=nodes)


def upsert_edge(graph: Graph, edge: Edge) -> Graph:
    """Insert an edge or merge its properties; parallel edges are collapsed.

    Raises:
        DanglingEdge: either endpoint is missing from the graph.
        CrossSubgraphViolation: endpoints span subgraphs and the edge
            type is not marked cross-subgraph, or a same-subgraph edge
            claims pending status.
    """
    if not graph.has_node(edge.src):
        raise DanglingEdge(f"missing src {edge.src.to_text()}")
    if not graph.has_node(edge.dst):
        raise DanglingEdge(f"missing dst {edge.dst.to_text()}")
    crosses = edge.src.subgraph != edge.dst.subgraph
    if crosses and edge.edge_type not in graph._cross_types:
        raise CrossSubgraphViolation(
            f"{edge.edge_type} may not span {edge.src.subgraph} -> {edge.dst.subgraph}"
        )
    if edge.pending and not (crosses and edge.edge_type in graph._cross_types):
        raise CrossSubgraphViolation(
            f"pending is reserved for unapproved cross-subgraph edges ({edge.edge_type})"
        )
    existing = graph._edges.get(edge.key)
    if existing is None:
        merged = edge
    else:
        merged = Edge(
            edge.edge_type,
            edge.src,
            edge.dst,
            _merge_properties(
                existing.properties,
                edge.properties,
                f"{edge.edge_type}[{edge.src.to_text()} -> {edge.dst.to_text()}]",
            ),
            # approval is sticky: once converged, re-ingest cannot re-quarantine
            pending=existing.pending and edge.pending,
        )
    edges = dict(graph._edges)
    edges[edge.key] = merged
    return graph._replace(edges=edges)


def with_edge_pending(graph: Graph, key: tuple[str, NodeKey, NodeKey], pending: bool) -> Graph:
    """Return a graph with one edge's pending flag replaced."""
    edge = graph._edges[key]  # KeyError for unknown edges is the contract
    edges = dict(graph._edges)
    edges[key] = Edge(edge.edge_type, edge.src, edge.dst, edge.properties, pending=pending)
    return graph._replace(edges=edges)


def neighbors(
    graph: Graph,
    key: NodeKey,
    edge_type: str,
    direction: str = "out",
    include_pending: bool = False,
) -> list[tuple[Edge, Node]]:
    """Deterministically ordered adjacent (edge, node) pairs.

    Pending edges are excluded by default: queries operate on approved
    knowledge unless a caller opts in.
    """
    if not graph.has_node(key):
        raise KeyError(key.to_text())
    if direction not in ("out", "in"):
        raise ValueError(f"direction must be out|in, not {direction!r}")
    out: list[tuple[Edge, Node]] = []
    for edge in graph._edges.values():
        if edge.edge_type != edge_type:
            continue
        if edge.pending and not include_pending:
            continue
        if direction == "out" and edge.src == key:
            out.append((edge, graph._nodes[edge.dst]))
        elif direction == "in" and edge.dst == key:
            out.append((edge, graph._nodes[edge.src]))
    out.sort(key=lambda pair: pair[0].key)
    return out


# -- canonical serialization ------------------------------------------


def _prop_record(properties: Mapping[str, Prop]) -> dict:
    return {
        name: {"provenance": prop.provenance.value, "value": _jsonable(prop.value)}
        for name, prop in properties.items()
    }


def _jsonable(value: object) -> object:
    return list(value) if isinstance(value, tuple) else value


def _key_record(key: NodeKey) -> dict:
    return {"subgraph": key.subgraph, "label": key.label, "id": key.id}


def canonical_serialize(graph: Graph) -> bytes:
    """Canonical newline-delimited JSON bytes for the whole graph.

    Order: header record, nodes sorted by (subgraph, label, id), approved
    edges sorted by (type, src, dst), then the pending section with the
    same edge ordering. Two graphs serialize identically iff they are equal.
    """
    lines = [
        render_record(
            {
                "format": FORMAT_NAME,
                "kind": "header",
                "registry_version": graph.registry_version,
                "version": FORMAT_VERSION,
            }
        )
    ]
    for node in graph.nodes():
        record = {"kind": "node", "properties": _prop_record(node.properties)}
        record.update(_key_record(node.key))
        lines.append(render_record(record))
    approved = [e for e in graph.edges() if not e.pending]
    pending = graph.pending_edges()
    for kind, group in (("edge", approved), ("pending_edge", pending)):
        for edge in group:
            lines.append(
                render_record(
                    {
                        "kind": kind,
                        "edge_type": edge.edge_type,
                        "src": _key_record(edge.src),
                        "dst": _key_record(edge.dst),
                        "properties": _prop_record(edge.properties),
                    }
                )
            )
    return ("\n".join(lines) + "\n").encode("utf-8")


def graph_hash(graph: Graph) -> str:
    """SHA-256 hex digest of the canonical serialization."""
    return hashlib.sha256(canonical_serialize(graph)).hexdigest()


# -- store files -------------------------------------------------------


def digest_path(store_path: Path | str) -> Path:
    path = Path(store_path)
    name = path.name
    if name.endswith(".skg.jsonl"):
        return path.with_name(name[: -len(".jsonl")] + ".sha256")
    return path.with_name(name + ".skg.sha256")


def save_store(graph: Graph, path: Path | str) -> str:
    """Rewrite the store file whole and refresh its digest sidecar."""
    path = Path(path)
    data = canonical_serialize(graph)
    digest = hashlib.sha256(data).hexdigest()
    path.write_bytes(data)
    digest_path(path).write_text(f"{digest}  {graph.registry_version}\n", encoding="utf-8")
    return digest


def _prop_from_record(name: str, record: object, where: str) -> Prop:
    if not isinstance(record, dict) or set(record) != {"provenance", "value"}:
        raise RegistryMismatch(f"{where}: malformed property record for {name}")
    value = record["value"]
    if isinstance(value, list):
        value = tuple(value)
    return Prop(value, Provenance(record["provenance"]))


def _reject_store_constant(literal: str):
    raise ValueError(f"non-finite number literal: {literal}")


def load_store(path: Path | str, registry: RegistryInfo) -> Graph:
    """Load a store file, re-enforcing referential integrity via upserts.

    Raises:
        RegistryMismatch: header registry_version differs from ``registry``.
        DanglingEdge: an edge record references an absent node.
    """
    path = Path(path)
    graph = Graph(registry)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise RegistryMismatch(f"{path}: empty store file")
    header = json.loads(lines[0], parse_constant=_reject_store_constant)
    if header.get("kind") != "header" or header.get("format") != FORMAT_NAME:
        raise RegistryMismatch(f"{path}: missing store header")
    if header.get("registry_version") != registry.version:
        raise RegistryMismatch(
            f"{path}: written under {header.get('registry_version')!r}, "
            f"loaded with {registry.version!r}"
        )
    for i, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        record = json.loads(line, parse_constant=_reject_store_constant)
        kind = record.get("kind")
        where = f"{path}:{i}"
        if kind == "node":
            key = NodeKey(record["subgraph"], record["label"], record["id"])
            props = {
                name: _prop_from_record(name, rec, where)
                for name, rec in record.get("properties", {}).items()
            }
            graph = upsert_node(graph, Node(key, props))
        elif kind in ("edge", "pending_edge"):
            src = NodeKey(**record["src"])
            dst = NodeKey(**record["dst"])
            props = {
                name: _prop_from_record(name, rec, where)
                for name, rec in record.get("properties", {}).items()
            }
            graph = upsert_edge(
                graph,
                Edge(record["edge_type"], src, dst, props, pending=kind == "pending_edge"),
            )
        else:
            raise RegistryMismatch(f"{where}: unknown record kind {kind!r}")
    return graph
