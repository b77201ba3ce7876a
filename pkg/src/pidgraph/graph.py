"""Embedded labeled property graph holding a flowsheet at one abstraction level.

Nodes carry labels (class hierarchy, most specific first), insertion-ordered
property maps, optional semantic descriptions, and optional embedding vectors.
Edges are directed, typed, and either compositional (has-type containment) or
reference (flow/control/signal) relationships.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator

from .errors import ConflictError, NotFoundError, ValidationError

PropertyValue = str | float | int | bool | list

DEFAULT_EMBEDDING_DIM = 1024


class EdgeKind(str, Enum):
    COMPOSITIONAL = "compositional"
    REFERENCE = "reference"


class AbstractionLevel(str, Enum):
    """Flowsheet abstraction levels, ordered from most to least detailed."""

    COMPLETE = "complete"
    PROCESS = "process"
    CONCEPTUAL = "conceptual"

    @property
    def rank(self) -> int:
        return _LEVEL_ORDER[self]

    def __lt__(self, other: "AbstractionLevel") -> bool:  # type: ignore[override]
        return self.rank < other.rank


_LEVEL_ORDER = {
    AbstractionLevel.COMPLETE: 0,
    AbstractionLevel.PROCESS: 1,
    AbstractionLevel.CONCEPTUAL: 2,
}


def is_has_type(edge_type: str) -> bool:
    """Containment relationships are 'has' or hasXxx / has_xxx variants."""
    return edge_type == "has" or edge_type.startswith("has_") or (
        edge_type.startswith("has") and len(edge_type) > 3 and edge_type[3].isupper()
    )


def validate_property_value(value: PropertyValue) -> PropertyValue:
    """Check a property value against the variant rules; returns it unchanged.

    Floats must be finite; lists must be homogeneous in variant and are
    validated recursively.
    """
    if isinstance(value, bool):
        return value
    if isinstance(value, int):
        return value
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValidationError(f"non-finite number not allowed: {value!r}")
        return value
    if isinstance(value, str):
        return value
    if isinstance(value, list):
        variants = {_variant_tag(item) for item in value}
        if len(variants) > 1:
            raise ValidationError(f"heterogeneous list not allowed: {value!r}")
        for item in value:
            validate_property_value(item)
        return value
    raise ValidationError(f"unsupported property type: {type(value).__name__}")


def _variant_tag(value: PropertyValue) -> str:
    if isinstance(value, bool):
        return "boolean"
    if isinstance(value, int):
        return "integer"
    if isinstance(value, float):
        return "number"
    if isinstance(value, str):
        return "text"
    if isinstance(value, list):
        return "list"
    raise ValidationError(f"unsupported property type: {type(value).__name__}")


@dataclass
class Node:
    id: str
    labels: list[str]
    properties: dict[str, PropertyValue] = field(default_factory=dict)
    global_semantic: str | None = None
    local_semantic: str | None = None
    global_embedding: list[float] | None = None
    local_embedding: list[float] | None = None

    def validate(self, embedding_dim: int) -> None:
        if not self.id:
            raise ValidationError("node id must be non-empty")
        if not self.labels:
            raise ValidationError(f"node {self.id!r} must carry at least one label")
        if len(set(self.labels)) != len(self.labels):
            raise ValidationError(f"node {self.id!r} has duplicate labels")
        for name, value in self.properties.items():
            if not name:
                raise ValidationError(f"node {self.id!r} has an empty property name")
            validate_property_value(value)
        for attr in ("global_embedding", "local_embedding"):
            vec = getattr(self, attr)
            if vec is not None and len(vec) != embedding_dim:
                raise ValidationError(
                    f"node {self.id!r} {attr} has dimension {len(vec)}, expected {embedding_dim}"
                )

    @property
    def primary_label(self) -> str:
        return self.labels[0]


@dataclass
class Edge:
    id: str
    source: str
    target: str
    edge_type: str
    kind: EdgeKind
    properties: dict[str, PropertyValue] = field(default_factory=dict)

    def validate(self) -> None:
        if not self.id:
            raise ValidationError("edge id must be non-empty")
        if not self.edge_type:
            raise ValidationError(f"edge {self.id!r} must carry an edge_type")
        expected = EdgeKind.COMPOSITIONAL if is_has_type(self.edge_type) else EdgeKind.REFERENCE
        if self.kind != expected:
            raise ValidationError(
                f"edge {self.id!r} type {self.edge_type!r} requires kind={expected.value}"
            )
        for name, value in self.properties.items():
            if not name:
                raise ValidationError(f"edge {self.id!r} has an empty property name")
            validate_property_value(value)


@dataclass
class GraphSchema:
    node_labels: set[str]
    edge_types: set[str]
    properties_by_label: dict[str, set[str]]


class PropertyGraph:
    """In-memory labeled property graph with adjacency indexes.

    Node ids and edge ids live in disjoint namespaces; each is duplicate-free.
    Every mutation re-checks referential integrity for the touched elements.
    """

    def __init__(
        self,
        abstraction_level: AbstractionLevel = AbstractionLevel.COMPLETE,
        embedding_dim: int = DEFAULT_EMBEDDING_DIM,
    ):
        if embedding_dim <= 0:
            raise ValidationError("embedding_dim must be positive")
        self.abstraction_level = abstraction_level
        self.embedding_dim = embedding_dim
        self.nodes: dict[str, Node] = {}
        self.edges: dict[str, Edge] = {}
        self._incident: dict[str, list[str]] = {}
        self._gen_counter = 0

    # -- mutation ---------------------------------------------------------

    def add_node(self, node: Node) -> str:
        if node.id in self.nodes:
            raise ConflictError(f"node id {node.id!r} already present")
        node.validate(self.embedding_dim)
        self.nodes[node.id] = node
        self._incident[node.id] = []
        return node.id

    def add_edge(self, edge: Edge) -> str:
        if edge.id in self.edges:
            raise ConflictError(f"edge id {edge.id!r} already present")
        edge.validate()
        if edge.source not in self.nodes:
            raise NotFoundError(f"edge {edge.id!r} source {edge.source!r} not in graph")
        if edge.target not in self.nodes:
            raise NotFoundError(f"edge {edge.id!r} target {edge.target!r} not in graph")
        self.edges[edge.id] = edge
        self._incident[edge.source].append(edge.id)
        if edge.target != edge.source:
            self._incident[edge.target].append(edge.id)
        return edge.id

    def remove_node(self, node_id: str) -> None:
        """Remove a node together with all incident edges."""
        if node_id not in self.nodes:
            raise NotFoundError(f"node {node_id!r} not in graph")
        for edge_id in list(self._incident[node_id]):
            self.remove_edge(edge_id)
        del self.nodes[node_id]
        del self._incident[node_id]

    def remove_edge(self, edge_id: str) -> None:
        edge = self.edges.pop(edge_id, None)
        if edge is None:
            raise NotFoundError(f"edge {edge_id!r} not in graph")
        self._incident[edge.source].remove(edge_id)
        if edge.target != edge.source:
            self._incident[edge.target].remove(edge_id)

    def mint_id(self) -> str:
        """Synthetic id for programmatic insertions; GraphML ids stay verbatim."""
        while True:
            self._gen_counter += 1
            candidate = f"gen:{self._gen_counter}"
            if candidate not in self.nodes and candidate not in self.edges:
                return candidate

    # -- reads ------------------------------------------------------------

    def get_node(self, node_id: str) -> Node:
        node = self.nodes.get(node_id)
        if node is None:
            raise NotFoundError(f"node {node_id!r} not in graph")
        return node

    def has_edge_between(self, source: str, target: str) -> bool:
        return any(
            self.edges[eid].source == source and self.edges[eid].target == target
            for eid in self._incident.get(source, ())
        )

    def get_neighbors(
        self, node_id: str, exclude: set[str] | None = None
    ) -> list[tuple[Node, Edge, str]]:
        """All adjacent nodes regardless of edge direction, minus excluded ids.

        Returns (neighbor, connecting edge, direction) triples where direction
        is "out" when the edge leaves node_id and "in" when it arrives.
        Ordered by edge id for determinism.
        """
        if node_id not in self.nodes:
            raise NotFoundError(f"node {node_id!r} not in graph")
        exclude = exclude or set()
        result = []
        for edge_id in sorted(self._incident[node_id]):
            edge = self.edges[edge_id]
            if edge.source == node_id:
                other, direction = edge.target, "out"
            else:
                other, direction = edge.source, "in"
            if other in exclude or other == node_id:
                continue
            result.append((self.nodes[other], edge, direction))
        return result

    def out_edges(self, node_id: str) -> list[Edge]:
        return [
            self.edges[eid]
            for eid in sorted(self._incident.get(node_id, ()))
            if self.edges[eid].source == node_id
        ]

    def in_edges(self, node_id: str) -> list[Edge]:
        return [
            self.edges[eid]
            for eid in sorted(self._incident.get(node_id, ()))
            if self.edges[eid].target == node_id
        ]

    def get_node_context(self, node_id: str) -> str:
        """Deterministic text rendering of a node: labels, properties, semantics.

        Embedding vectors are never included.
        """
        node = self.get_node(node_id)
        lines = [f"Labels: {', '.join(node.labels)}"]
        lines.append(f"Properties: {render_properties(node.properties)}")
        if node.global_semantic:
            lines.append(f"Global semantic: {node.global_semantic}")
        if node.local_semantic:
            lines.append(f"Local semantic: {node.local_semantic}")
        return "\n".join(lines)

    def schema(self) -> GraphSchema:
        """Exact inventory of labels, edge types, and properties per label."""
        node_labels: set[str] = set()
        properties_by_label: dict[str, set[str]] = {}
        for node in self.nodes.values():
            for label in node.labels:
                node_labels.add(label)
                bucket = properties_by_label.setdefault(label, set())
                bucket.update(node.properties.keys())
        edge_types = {edge.edge_type for edge in self.edges.values()}
        return GraphSchema(node_labels, edge_types, properties_by_label)

    def check_integrity(self) -> None:
        """Assert referential integrity over the full graph."""
        for edge in self.edges.values():
            if edge.source not in self.nodes or edge.target not in self.nodes:
                raise ValidationError(f"dangling edge {edge.id!r}")
        for node in self.nodes.values():
            node.validate(self.embedding_dim)

    def copy(self) -> "PropertyGraph":
        """Deep copy; the result is an independent snapshot."""
        out = PropertyGraph(self.abstraction_level, self.embedding_dim)
        for node in self.nodes.values():
            out.add_node(
                Node(
                    id=node.id,
                    labels=list(node.labels),
                    properties=dict(node.properties),
                    global_semantic=node.global_semantic,
                    local_semantic=node.local_semantic,
                    global_embedding=list(node.global_embedding) if node.global_embedding else None,
                    local_embedding=list(node.local_embedding) if node.local_embedding else None,
                )
            )
        for edge in self.edges.values():
            out.add_edge(
                Edge(
                    id=edge.id,
                    source=edge.source,
                    target=edge.target,
                    edge_type=edge.edge_type,
                    kind=edge.kind,
                    properties=dict(edge.properties),
                )
            )
        out._gen_counter = self._gen_counter
        return out

    def node_ids(self) -> Iterator[str]:
        return iter(sorted(self.nodes))

    def __len__(self) -> int:
        return len(self.nodes)


def render_properties(properties: dict[str, PropertyValue]) -> str:
    """Compact JSON rendering preserving insertion order; byte-stable."""
    return json.dumps(properties, ensure_ascii=False, separators=(", ", ": "))
