"""Per-node semantic enrichment: LLM-written global/local descriptions encoded
into embedding vectors.

Each full enrichment issues exactly one global and one local description call
per node, in deterministic node-id order, then embeds both texts. A node is
committed atomically: on any failure (gateway error, wrong embedding
dimension) the node is left untouched and the failure is reported per node.
Topology is never modified.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .errors import EnrichmentError, GatewayError
from .graph import Node, PropertyGraph, render_properties
from .llm import LlmHandle, fill_template, load_prompt
from .rendering import ContextMode, render_context


def _labels_text(node: Node) -> str:
    return json.dumps(node.labels, ensure_ascii=False)


def _connection_entry(node: Node, edge) -> dict:
    return {
        "edge_type": edge.edge_type,
        "labels": node.labels,
        "properties": node.properties,
    }


def connection_groups(graph: PropertyGraph, node_id: str) -> tuple[list[dict], list[dict]]:
    """get_neighbors output split into incoming/outgoing JSON-ready entries."""
    incoming: list[dict] = []
    outgoing: list[dict] = []
    for neighbor, edge, direction in graph.get_neighbors(node_id):
        entry = _connection_entry(neighbor, edge)
        (outgoing if direction == "out" else incoming).append(entry)
    return incoming, outgoing


def generate_global_semantic(
    node: Node, graph_rendering: str, llm: LlmHandle, tag: str | None = None
) -> str:
    """Whole-flowsheet role description; graph_rendering comes from the
    ContextRAG graph mode."""
    prompt = fill_template(
        load_prompt("global_semantic"),
        {
            "labels": _labels_text(node),
            "properties_json": render_properties(node.properties),
            "full_graph_representation": graph_rendering,
        },
    )
    try:
        return llm.complete(prompt, tag=tag)
    except GatewayError as exc:
        raise EnrichmentError(node.id, str(exc)) from exc


def generate_local_semantic(
    node: Node,
    incoming: list[dict],
    outgoing: list[dict],
    llm: LlmHandle,
    tag: str | None = None,
) -> str:
    prompt = fill_template(
        load_prompt("local_semantic"),
        {
            "node_labels": _labels_text(node),
            "node_properties_json": render_properties(node.properties),
            "incoming_connections_json": json.dumps(incoming, ensure_ascii=False, indent=2),
            "outgoing_connections_json": json.dumps(outgoing, ensure_ascii=False, indent=2),
        },
    )
    try:
        return llm.complete(prompt, tag=tag)
    except GatewayError as exc:
        raise EnrichmentError(node.id, str(exc)) from exc


@dataclass
class EnrichmentReport:
    enriched: list[str] = field(default_factory=list)
    skipped: list[str] = field(default_factory=list)
    errors: list[tuple[str, str]] = field(default_factory=list)

    def raise_if_failed(self) -> None:
        if self.errors:
            failed = ", ".join(node_id for node_id, _ in self.errors)
            raise EnrichmentError(failed, f"{len(self.errors)} node(s) failed")


def enrich_graph(
    graph: PropertyGraph,
    llm: LlmHandle,
    skip_existing: bool = False,
    tag: str | None = None,
) -> EnrichmentReport:
    """Generate semantics and embeddings for every node, committing per node."""
    report = EnrichmentReport()
    rendering = render_context(graph, ContextMode.GRAPH)
    for node_id in sorted(graph.nodes):
        node = graph.nodes[node_id]
        if skip_existing and _fully_enriched(node):
            report.skipped.append(node_id)
            continue
        try:
            global_text = generate_global_semantic(node, rendering, llm, tag=tag)
            incoming, outgoing = connection_groups(graph, node_id)
            local_text = generate_local_semantic(node, incoming, outgoing, llm, tag=tag)
            if not global_text or not local_text:
                raise EnrichmentError(node_id, "empty semantic description")
            vectors = llm.gateway.embed([global_text, local_text], tag=tag)
            for vector in vectors:
                if len(vector) != graph.embedding_dim:
                    raise EnrichmentError(
                        node_id,
                        f"embedding dimension {len(vector)} != graph dim {graph.embedding_dim}",
                    )
        except (EnrichmentError, GatewayError) as exc:
            message = str(exc)
            report.errors.append((node_id, message))
            continue
        node.global_semantic = global_text
        node.local_semantic = local_text
        node.global_embedding = list(vectors[0])
        node.local_embedding = list(vectors[1])
        report.enriched.append(node_id)
    return report


def _fully_enriched(node: Node) -> bool:
    return (
        node.global_semantic is not None
        and node.local_semantic is not None
        and node.global_embedding is not None
        and node.local_embedding is not None
    )
