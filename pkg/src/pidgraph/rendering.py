"""Sanitized flowsheet renderings used as LLM context.

Graph mode keeps labels, tag numbers, design-specification properties, and
edge labels. Topology mode keeps only node labels and connectivity. Both strip
non-semantic artifacts: embedding vectors are never rendered, and property
names matching the deny patterns (URIs, internal identifiers, drawing
coordinates) are filtered out. Node references use tag names (graph mode) or
label-derived aliases (topology mode), never raw internal ids.
"""

from __future__ import annotations

import fnmatch
from enum import Enum
from xml.sax.saxutils import escape, quoteattr

from .graph import PropertyGraph

DENY_PROPERTY_PATTERNS = (
    "uri",
    "*Uri",
    "*URI",
    "internalId",
    "*InternalId",
    "x",
    "y",
    "position*",
    "drawing*",
)


class ContextMode(str, Enum):
    GRAPH = "graph"
    TOPOLOGY = "topology"


def _property_allowed(name: str) -> bool:
    return not any(fnmatch.fnmatchcase(name, pattern) for pattern in DENY_PROPERTY_PATTERNS)


def node_references(graph: PropertyGraph, use_tags: bool) -> dict[str, str]:
    """Readable, collision-free reference per node, stable across renders."""
    refs: dict[str, str] = {}
    taken: set[str] = set()
    counters: dict[str, int] = {}
    for node_id in sorted(graph.nodes):
        node = graph.nodes[node_id]
        ref = None
        if use_tags:
            tag = node.properties.get("tagName")
            if isinstance(tag, str) and tag and tag not in taken:
                ref = tag
        if ref is None:
            counters[node.primary_label] = counters.get(node.primary_label, 0) + 1
            ref = f"{node.primary_label}_{counters[node.primary_label]}"
            while ref in taken:
                counters[node.primary_label] += 1
                ref = f"{node.primary_label}_{counters[node.primary_label]}"
        refs[node_id] = ref
        taken.add(ref)
    return refs


def render_context(graph: PropertyGraph, mode: ContextMode) -> str:
    """GraphML-style rendering of the whole flowsheet, filtered per mode."""
    refs = node_references(graph, use_tags=mode is ContextMode.GRAPH)
    lines = [f'<flowsheet level="{graph.abstraction_level.value}">']
    for node_id in sorted(graph.nodes):
        node = graph.nodes[node_id]
        labels_attr = ":" + ":".join(node.labels)
        head = f"  <node ref={quoteattr(refs[node_id])} labels={quoteattr(labels_attr)}"
        if mode is ContextMode.TOPOLOGY:
            lines.append(head + "/>")
            continue
        kept = [(k, v) for k, v in node.properties.items() if _property_allowed(k)]
        if not kept:
            lines.append(head + "/>")
            continue
        lines.append(head + ">")
        for name, value in kept:
            lines.append(f"    <data key={quoteattr(name)}>{escape(_render_value(value))}</data>")
        lines.append("  </node>")
    for edge_id in sorted(graph.edges):
        edge = graph.edges[edge_id]
        source, target = refs[edge.source], refs[edge.target]
        if mode is ContextMode.TOPOLOGY:
            lines.append(f"  <edge source={quoteattr(source)} target={quoteattr(target)}/>")
            continue
        head = (
            f"  <edge source={quoteattr(source)} target={quoteattr(target)} "
            f"label={quoteattr(edge.edge_type)}"
        )
        kept = [(k, v) for k, v in edge.properties.items() if _property_allowed(k)]
        if not kept:
            lines.append(head + "/>")
        else:
            lines.append(head + ">")
            for name, value in kept:
                lines.append(f"    <data key={quoteattr(name)}>{escape(_render_value(value))}</data>")
            lines.append("  </edge>")
    lines.append("</flowsheet>")
    lines.append("")
    return "\n".join(lines)


def _render_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, list):
        import json

        return json.dumps(value, ensure_ascii=False)
    return str(value)
