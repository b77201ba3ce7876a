"""GraphML import/export for property graphs.

Profile: a ``<graphml>`` root; ``<key>`` declarations for the semantic fields
(``global_semantic``, ``local_semantic``, ``global_semantic_embedding``,
``local_semantic_embedding``) plus one key per property name; node labels in
an APOC-style ``labels=":A:B"`` attribute; edges carry ``label`` (edge type)
and ``kind`` (compositional|reference) attributes. Embeddings are a bracketed
comma-separated decimal list. Export is byte-deterministic.

An optional binary sidecar stores embeddings as little-endian 64-bit floats;
the GraphML file remains authoritative.
"""

from __future__ import annotations

import struct
import xml.etree.ElementTree as ET
from pathlib import Path
from xml.sax.saxutils import escape, quoteattr

from .errors import GraphMlParseError, GraphMlSchemaError, ValidationError
from .graph import (
    AbstractionLevel,
    Edge,
    EdgeKind,
    Node,
    PropertyGraph,
    PropertyValue,
    is_has_type,
)

GRAPHML_XMLNS = "http://graphml.graphdrawing.org/xmlns"

RESERVED_KEYS = (
    "global_semantic",
    "local_semantic",
    "global_semantic_embedding",
    "local_semantic_embedding",
    "abstraction_level",
    "embedding_dim",
)

_VARIANT_TO_XML = {"text": "string", "number": "double", "integer": "long", "boolean": "boolean", "list": "json"}
_XML_TO_VARIANT = {v: k for k, v in _VARIANT_TO_XML.items()}

SIDECAR_MAGIC = b"PIDEMB1\n"


def _variant_of(value: PropertyValue) -> str:
    if isinstance(value, bool):
        return "boolean"
    if isinstance(value, int):
        return "integer"
    if isinstance(value, float):
        return "number"
    if isinstance(value, str):
        return "text"
    return "list"


def _value_to_text(value: PropertyValue, variant: str) -> str:
    if variant == "boolean":
        return "true" if value else "false"
    if variant == "list":
        import json

        return json.dumps(value, ensure_ascii=False)
    if variant == "number":
        return repr(float(value))
    return str(value)


def _text_to_value(text: str, variant: str) -> PropertyValue:
    if variant == "text":
        return text
    if variant == "integer":
        return int(text)
    if variant == "number":
        return float(text)
    if variant == "boolean":
        if text not in ("true", "false"):
            raise GraphMlSchemaError(f"invalid boolean literal {text!r}")
        return text == "true"
    if variant == "list":
        import json

        value = json.loads(text)
        if not isinstance(value, list):
            raise GraphMlSchemaError(f"json key must hold a list, got {type(value).__name__}")
        return value
    raise GraphMlSchemaError(f"unsupported key type {variant!r}")


def format_embedding(vector: list[float]) -> str:
    return "[" + ",".join(repr(float(v)) for v in vector) + "]"


def parse_embedding(text: str) -> list[float]:
    body = text.strip()
    if not (body.startswith("[") and body.endswith("]")):
        raise GraphMlSchemaError("embedding value must be a bracketed decimal list")
    body = body[1:-1].strip()
    if not body:
        return []
    try:
        return [float(part) for part in body.replace("\n", ",").split(",") if part.strip() != ""]
    except ValueError as exc:
        raise GraphMlSchemaError(f"invalid embedding entry: {exc}") from exc


def _collect_keys(graph: PropertyGraph) -> list[tuple[str, str, str, str]]:
    """(key id, for, attr.name, xml type) for every property key, sorted."""
    seen: dict[tuple[str, str, str], None] = {}
    for node in graph.nodes.values():
        for name, value in node.properties.items():
            seen[("node", name, _variant_of(value))] = None
    for edge in graph.edges.values():
        for name, value in edge.properties.items():
            seen[("edge", name, _variant_of(value))] = None

    variants_by_name: dict[tuple[str, str], set[str]] = {}
    for owner, name, variant in seen:
        variants_by_name.setdefault((owner, name), set()).add(variant)

    keys = []
    for owner, name, variant in sorted(seen):
        if name in RESERVED_KEYS:
            raise GraphMlSchemaError(f"property name {name!r} collides with a reserved key")
        base = name if owner == "node" else f"edge.{name}"
        if len(variants_by_name[(owner, name)]) > 1:
            key_id = f"{base}--{variant}"
        else:
            key_id = base
        keys.append((key_id, owner, name, _VARIANT_TO_XML[variant]))
    return keys


def export_graphml(graph: PropertyGraph, include_embeddings: bool) -> bytes:
    graph.check_integrity()
    property_keys = _collect_keys(graph)
    key_id_for: dict[tuple[str, str, str], str] = {}
    for key_id, owner, name, xml_type in property_keys:
        key_id_for[(owner, name, _XML_TO_VARIANT[xml_type])] = key_id

    out: list[str] = []
    out.append('<?xml version="1.0" encoding="UTF-8"?>')
    out.append(f'<graphml xmlns="{GRAPHML_XMLNS}">')
    out.append('  <key id="abstraction_level" for="graph" attr.name="abstraction_level" attr.type="string"/>')
    out.append('  <key id="embedding_dim" for="graph" attr.name="embedding_dim" attr.type="long"/>')
    for semantic_key in ("global_semantic", "local_semantic", "global_semantic_embedding", "local_semantic_embedding"):
        out.append(f'  <key id="{semantic_key}" for="node" attr.name="{semantic_key}" attr.type="string"/>')
    for key_id, owner, name, xml_type in property_keys:
        out.append(
            f'  <key id={quoteattr(key_id)} for="{owner}" attr.name={quoteattr(name)} attr.type="{xml_type}"/>'
        )
    out.append('  <graph id="flowsheet" edgedefault="directed">')
    out.append(f'    <data key="abstraction_level">{graph.abstraction_level.value}</data>')
    out.append(f'    <data key="embedding_dim">{graph.embedding_dim}</data>')

    for node in graph.nodes.values():
        labels_attr = ":" + ":".join(node.labels)
        data_lines = []
        for name, value in node.properties.items():
            key_id = key_id_for[("node", name, _variant_of(value))]
            data_lines.append(
                f'      <data key={quoteattr(key_id)}>{escape(_value_to_text(value, _variant_of(value)))}</data>'
            )
        if node.global_semantic is not None:
            data_lines.append(f'      <data key="global_semantic">{escape(node.global_semantic)}</data>')
        if node.local_semantic is not None:
            data_lines.append(f'      <data key="local_semantic">{escape(node.local_semantic)}</data>')
        if include_embeddings:
            if node.global_embedding is not None:
                data_lines.append(
                    f'      <data key="global_semantic_embedding">{format_embedding(node.global_embedding)}</data>'
                )
            if node.local_embedding is not None:
                data_lines.append(
                    f'      <data key="local_semantic_embedding">{format_embedding(node.local_embedding)}</data>'
                )
        if data_lines:
            out.append(f'    <node id={quoteattr(node.id)} labels={quoteattr(labels_attr)}>')
            out.extend(data_lines)
            out.append("    </node>")
        else:
            out.append(f'    <node id={quoteattr(node.id)} labels={quoteattr(labels_attr)}/>')

    for edge in graph.edges.values():
        head = (
            f'    <edge id={quoteattr(edge.id)} source={quoteattr(edge.source)} '
            f'target={quoteattr(edge.target)} label={quoteattr(edge.edge_type)} kind="{edge.kind.value}"'
        )
        if edge.properties:
            out.append(head + ">")
            for name, value in edge.properties.items():
                key_id = key_id_for[("edge", name, _variant_of(value))]
                out.append(
                    f'      <data key={quoteattr(key_id)}>{escape(_value_to_text(value, _variant_of(value)))}</data>'
                )
            out.append("    </edge>")
        else:
            out.append(head + "/>")

    out.append("  </graph>")
    out.append("</graphml>")
    out.append("")
    return "\n".join(out).encode("utf-8")


def _strip_ns(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def import_graphml(data: bytes | str) -> PropertyGraph:
    if isinstance(data, bytes):
        text = data.decode("utf-8")
    else:
        text = data
    try:
        root = ET.fromstring(text)
    except ET.ParseError as exc:
        line, column = exc.position if exc.position else (None, None)
        raise GraphMlParseError(str(exc.msg if hasattr(exc, "msg") else exc), line, column) from exc

    if _strip_ns(root.tag) != "graphml":
        raise GraphMlSchemaError(f"root element is {root.tag!r}, expected graphml")

    # key id -> (for, attr.name, variant)
    key_decls: dict[str, tuple[str, str, str]] = {}
    graph_el = None
    for child in root:
        tag = _strip_ns(child.tag)
        if tag == "key":
            key_id = child.get("id")
            owner = child.get("for", "node")
            attr_name = child.get("attr.name", key_id or "")
            xml_type = child.get("attr.type", "string")
            if key_id is None:
                raise GraphMlSchemaError("key declaration missing id")
            if xml_type not in _XML_TO_VARIANT:
                raise GraphMlSchemaError(f"key {key_id!r} has unsupported type {xml_type!r}")
            key_decls[key_id] = (owner, attr_name, _XML_TO_VARIANT[xml_type])
        elif tag == "graph":
            graph_el = child
    if graph_el is None:
        raise GraphMlSchemaError("no <graph> element found")

    level = AbstractionLevel.COMPLETE
    embedding_dim = None
    for data_el in graph_el:
        if _strip_ns(data_el.tag) != "data":
            continue
        key = data_el.get("key")
        if key == "abstraction_level":
            try:
                level = AbstractionLevel((data_el.text or "").strip())
            except ValueError:
                raise GraphMlSchemaError(f"unknown abstraction level {data_el.text!r}") from None
        elif key == "embedding_dim":
            embedding_dim = int((data_el.text or "0").strip())

    graph = PropertyGraph(level, embedding_dim or 1024)

    def read_data(element: ET.Element, owner: str) -> tuple[dict[str, PropertyValue], dict[str, str]]:
        properties: dict[str, PropertyValue] = {}
        specials: dict[str, str] = {}
        for data_el in element:
            if _strip_ns(data_el.tag) != "data":
                continue
            key = data_el.get("key")
            if key is None:
                raise GraphMlSchemaError("data element missing key attribute")
            text = data_el.text or ""
            if key in RESERVED_KEYS:
                specials[key] = text
                continue
            decl = key_decls.get(key)
            if decl is None:
                raise GraphMlSchemaError(f"data references undeclared key {key!r}")
            decl_owner, attr_name, variant = decl
            if decl_owner != owner:
                raise GraphMlSchemaError(f"key {key!r} declared for {decl_owner!r}, used on {owner!r}")
            properties[attr_name] = _text_to_value(text, variant)
        return properties, specials

    for element in graph_el:
        if _strip_ns(element.tag) != "node":
            continue
        node_id = element.get("id")
        if node_id is None:
            raise GraphMlSchemaError("node missing id attribute")
        labels_attr = element.get("labels", "")
        labels = [part for part in labels_attr.split(":") if part]
        properties, specials = read_data(element, "node")
        node = Node(id=node_id, labels=labels, properties=properties)
        if "global_semantic" in specials:
            node.global_semantic = specials["global_semantic"]
        if "local_semantic" in specials:
            node.local_semantic = specials["local_semantic"]
        if "global_semantic_embedding" in specials:
            node.global_embedding = parse_embedding(specials["global_semantic_embedding"])
        if "local_semantic_embedding" in specials:
            node.local_embedding = parse_embedding(specials["local_semantic_embedding"])
        try:
            graph.add_node(node)
        except ValidationError as exc:
            raise GraphMlSchemaError(str(exc)) from exc

    for element in graph_el:
        if _strip_ns(element.tag) != "edge":
            continue
        edge_id = element.get("id")
        source = element.get("source")
        target = element.get("target")
        label = element.get("label")
        if edge_id is None or source is None or target is None:
            raise GraphMlSchemaError("edge missing id/source/target attribute")
        if label is None:
            raise GraphMlSchemaError(f"edge {edge_id!r} missing label attribute")
        kind_attr = element.get("kind")
        if kind_attr is None:
            kind = EdgeKind.COMPOSITIONAL if is_has_type(label) else EdgeKind.REFERENCE
        else:
            try:
                kind = EdgeKind(kind_attr)
            except ValueError:
                raise GraphMlSchemaError(f"edge {edge_id!r} has unknown kind {kind_attr!r}") from None
        properties, _ = read_data(element, "edge")
        try:
            graph.add_edge(Edge(edge_id, source, target, label, kind, properties))
        except ValidationError as exc:
            raise GraphMlSchemaError(str(exc)) from exc

    graph.check_integrity()
    return graph


# -- embeddings sidecar ----------------------------------------------------


def export_embeddings_sidecar(graph: PropertyGraph) -> bytes:
    """Fixed-width binary embeddings: magic, dim, then per-node records."""
    records = []
    for node_id in sorted(graph.nodes):
        node = graph.nodes[node_id]
        if node.global_embedding is None and node.local_embedding is None:
            continue
        records.append(node)
    parts = [SIDECAR_MAGIC, struct.pack("<II", graph.embedding_dim, len(records))]
    for node in records:
        encoded = node.id.encode("utf-8")
        flags = (1 if node.global_embedding is not None else 0) | (
            2 if node.local_embedding is not None else 0
        )
        parts.append(struct.pack("<H", len(encoded)))
        parts.append(encoded)
        parts.append(struct.pack("<B", flags))
        if node.global_embedding is not None:
            parts.append(struct.pack(f"<{graph.embedding_dim}d", *node.global_embedding))
        if node.local_embedding is not None:
            parts.append(struct.pack(f"<{graph.embedding_dim}d", *node.local_embedding))
    return b"".join(parts)


def apply_embeddings_sidecar(graph: PropertyGraph, data: bytes) -> None:
    if not data.startswith(SIDECAR_MAGIC):
        raise GraphMlSchemaError("not an embeddings sidecar (bad magic)")
    offset = len(SIDECAR_MAGIC)
    dim, count = struct.unpack_from("<II", data, offset)
    offset += 8
    if dim != graph.embedding_dim:
        raise GraphMlSchemaError(
            f"sidecar dimension {dim} does not match graph embedding_dim {graph.embedding_dim}"
        )
    vec_size = 8 * dim
    for _ in range(count):
        (id_len,) = struct.unpack_from("<H", data, offset)
        offset += 2
        node_id = data[offset : offset + id_len].decode("utf-8")
        offset += id_len
        (flags,) = struct.unpack_from("<B", data, offset)
        offset += 1
        node = graph.nodes.get(node_id)
        if node is None:
            raise GraphMlSchemaError(f"sidecar references unknown node {node_id!r}")
        if flags & 1:
            node.global_embedding = list(struct.unpack_from(f"<{dim}d", data, offset))
            offset += vec_size
        if flags & 2:
            node.local_embedding = list(struct.unpack_from(f"<{dim}d", data, offset))
            offset += vec_size


def sidecar_path(path: Path | str) -> Path:
    return Path(str(path) + ".emb")


def save_graph(
    graph: PropertyGraph,
    path: Path | str,
    include_embeddings: bool = True,
    sidecar: bool = False,
) -> Path:
    """Write GraphML to path; with sidecar=True embeddings go to <path>.emb."""
    path = Path(path)
    if sidecar:
        path.write_bytes(export_graphml(graph, include_embeddings=False))
        sidecar_path(path).write_bytes(export_embeddings_sidecar(graph))
    else:
        path.write_bytes(export_graphml(graph, include_embeddings=include_embeddings))
    return path


def load_graph(path: Path | str) -> PropertyGraph:
    """Read GraphML; a <path>.emb sidecar, when present, fills embeddings."""
    path = Path(path)
    graph = import_graphml(path.read_bytes())
    side = sidecar_path(path)
    if side.exists():
        apply_embeddings_sidecar(graph, side.read_bytes())
    return graph
