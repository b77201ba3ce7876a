"""Executor for the Cypher-style subset over an in-memory property graph.

Pattern matching is exhaustive backtracking: node candidates and edges are
always iterated in id order, so results are deterministic. Edges are not
reused within one path pattern (relationship uniqueness); rows are ordered
lexicographically over the bound entity ids in variable-declaration order.
Unknown labels or edge types produce a warning and (naturally) no rows,
mirroring how a real graph database returns an empty result instead of
failing the query.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from ..errors import HopCeilingError
from ..graph import GraphSchema, Node, PropertyGraph, render_properties
from .ast import (
    BoolOp,
    Comparison,
    CountCall,
    LabelTest,
    Literal,
    NodePattern,
    NotOp,
    PathPattern,
    PropertyAccess,
    QueryAst,
    RelPattern,
    VariableRef,
)

DEFAULT_HOP_CEILING = 8


@dataclass
class NodeRef:
    node_id: str
    labels: list[str]
    properties: dict


@dataclass
class EdgeRef:
    edge_id: str
    edge_type: str


@dataclass
class ResultTable:
    columns: list[str]
    rows: list[list]
    warnings: list[str] = field(default_factory=list)

    def render(self) -> str:
        """Deterministic text table; byte-identical for identical inputs."""
        rendered_rows = [[render_cell(cell) for cell in row] for row in self.rows]
        widths = [len(c) for c in self.columns]
        for row in rendered_rows:
            for i, cell in enumerate(row):
                widths[i] = max(widths[i], len(cell))
        lines = []
        lines.append(" | ".join(c.ljust(widths[i]) for i, c in enumerate(self.columns)).rstrip())
        lines.append("-+-".join("-" * w for w in widths))
        for row in rendered_rows:
            lines.append(" | ".join(c.ljust(widths[i]) for i, c in enumerate(row)).rstrip())
        lines.append(f"({len(self.rows)} row{'s' if len(self.rows) != 1 else ''})")
        for warning in self.warnings:
            lines.append(f"warning: {warning}")
        return "\n".join(lines)


def render_cell(cell) -> str:
    if cell is None:
        return "null"
    if isinstance(cell, bool):
        return "true" if cell else "false"
    if isinstance(cell, NodeRef):
        labels = ":" + ":".join(cell.labels)
        if cell.properties:
            return f"({labels} {render_properties(cell.properties)})"
        return f"({labels})"
    if isinstance(cell, EdgeRef):
        return f"[:{cell.edge_type}]"
    if isinstance(cell, list) and cell and isinstance(cell[0], EdgeRef):
        return "[" + ", ".join(f":{e.edge_type}" for e in cell) + "]"
    if isinstance(cell, str):
        return json.dumps(cell, ensure_ascii=False)
    if isinstance(cell, float):
        return repr(cell)
    return json.dumps(cell, ensure_ascii=False)


def _declared_variables(ast: QueryAst) -> list[str]:
    ordered: list[str] = []
    for pattern in ast.match_patterns:
        for element in pattern.elements:
            if element.variable and element.variable not in ordered:
                ordered.append(element.variable)
    return ordered


def _schema_warnings(ast: QueryAst, schema: GraphSchema) -> list[str]:
    warnings = []
    seen_labels: set[str] = set()
    seen_types: set[str] = set()
    for pattern in ast.match_patterns:
        for element in pattern.elements:
            if isinstance(element, NodePattern):
                seen_labels.update(element.labels)
            elif element.edge_type is not None:
                seen_types.add(element.edge_type)

    def walk(expr):
        if isinstance(expr, LabelTest):
            seen_labels.add(expr.label)
        elif isinstance(expr, Comparison):
            walk(expr.left)
            walk(expr.right)
        elif isinstance(expr, BoolOp):
            walk(expr.left)
            walk(expr.right)
        elif isinstance(expr, NotOp):
            walk(expr.operand)

    if ast.where_clause is not None:
        walk(ast.where_clause)
    for label in sorted(seen_labels - schema.node_labels):
        warnings.append(f"unknown label {label!r}")
    for edge_type in sorted(seen_types - schema.edge_types):
        warnings.append(f"unknown edge type {edge_type!r}")
    return warnings


def _node_matches(node: Node, np: NodePattern) -> bool:
    if any(label not in node.labels for label in np.labels):
        return False
    for name, value in np.properties.items():
        if name not in node.properties or node.properties[name] != value:
            return False
    return True


class _Matcher:
    def __init__(self, graph: PropertyGraph, hop_ceiling: int):
        self.graph = graph
        self.hop_ceiling = hop_ceiling

    def candidate_edges(self, node_id: str, rel: RelPattern):
        """(edge, other endpoint id) pairs leaving node_id per the pattern."""
        out = []
        for edge_id in sorted(self.graph._incident.get(node_id, ())):
            edge = self.graph.edges[edge_id]
            if rel.edge_type is not None and edge.edge_type != rel.edge_type:
                continue
            if edge.source == node_id and rel.direction in ("out", "any"):
                out.append((edge, edge.target))
            if edge.target == node_id and rel.direction in ("in", "any"):
                out.append((edge, edge.source))
        return out

    def var_length_paths(self, start: str, rel: RelPattern, used: set[str]):
        """All (end node, edge id tuple) walks of min..max hops, edges distinct."""
        min_hops = rel.min_hops or 1
        max_hops = rel.max_hops if rel.max_hops is not None else self.hop_ceiling
        results: list[tuple[str, tuple[str, ...]]] = []

        def dfs(current: str, path: tuple[str, ...]):
            if len(path) >= min_hops:
                results.append((current, path))
            if len(path) >= max_hops:
                return
            for edge, other in self.candidate_edges(current, rel):
                if edge.id in used or edge.id in path:
                    continue
                dfs(other, path + (edge.id,))

        dfs(start, ())
        return results

    def match_pattern(self, pattern: PathPattern, binding: dict) -> list[dict]:
        elements = pattern.elements
        results: list[dict] = []

        def bind_node(np: NodePattern, node_id: str, binding: dict) -> dict | None:
            node = self.graph.nodes[node_id]
            if not _node_matches(node, np):
                return None
            if np.variable:
                bound = binding.get(np.variable)
                if bound is not None:
                    if not (isinstance(bound, str) and bound == node_id):
                        return None
                    return binding
                binding = dict(binding)
                binding[np.variable] = node_id
            return binding

        def rec(idx: int, current_id: str, binding: dict, used: set[str]):
            if idx >= len(elements):
                results.append(binding)
                return
            rel: RelPattern = elements[idx]
            next_np: NodePattern = elements[idx + 1]
            if rel.var_length:
                for end_id, edge_ids in self.var_length_paths(current_id, rel, used):
                    next_binding = bind_node(next_np, end_id, binding)
                    if next_binding is None:
                        continue
                    if rel.variable:
                        existing = next_binding.get(rel.variable)
                        if existing is not None and existing != list(edge_ids):
                            continue
                        next_binding = dict(next_binding)
                        next_binding[rel.variable] = list(edge_ids)
                    rec(idx + 2, end_id, next_binding, used | set(edge_ids))
            else:
                for edge, other in self.candidate_edges(current_id, rel):
                    if edge.id in used:
                        continue
                    next_binding = bind_node(next_np, other, binding)
                    if next_binding is None:
                        continue
                    if rel.variable:
                        existing = next_binding.get(rel.variable)
                        if existing is not None and existing != edge.id:
                            continue
                        next_binding = dict(next_binding)
                        next_binding[rel.variable] = edge.id
                    rec(idx + 2, other, next_binding, used | {edge.id})

        first: NodePattern = elements[0]
        if first.variable and first.variable in binding:
            seeds = [binding[first.variable]]
        else:
            seeds = sorted(self.graph.nodes)
        for node_id in seeds:
            if not isinstance(node_id, str) or node_id not in self.graph.nodes:
                continue
            seeded = bind_node(first, node_id, binding)
            if seeded is None:
                continue
            rec(1, node_id, seeded, set())
        return results


def _entity_sort_key(value):
    if isinstance(value, list):
        return tuple(value)
    return (value,)


def _lookup(graph: PropertyGraph, binding: dict, variable: str):
    value = binding.get(variable)
    if isinstance(value, str):
        if value in graph.nodes:
            return ("node", graph.nodes[value])
        if value in graph.edges:
            return ("edge", graph.edges[value])
    if isinstance(value, list):
        return ("edges", [graph.edges[eid] for eid in value])
    return ("missing", None)


def _eval_expr(expr, graph: PropertyGraph, binding: dict):
    if isinstance(expr, Literal):
        return expr.value
    if isinstance(expr, VariableRef):
        kind, entity = _lookup(graph, binding, expr.name)
        if kind == "node":
            return ("node", entity.id)
        if kind == "edge":
            return ("edge", entity.id)
        if kind == "edges":
            return ("edges", tuple(e.id for e in entity))
        return None
    if isinstance(expr, PropertyAccess):
        kind, entity = _lookup(graph, binding, expr.variable)
        if kind in ("node", "edge"):
            return entity.properties.get(expr.name)
        return None
    if isinstance(expr, LabelTest):
        kind, entity = _lookup(graph, binding, expr.variable)
        return kind == "node" and expr.label in entity.labels
    if isinstance(expr, Comparison):
        left = _eval_expr(expr.left, graph, binding)
        right = _eval_expr(expr.right, graph, binding)
        return _compare(expr.op, left, right)
    if isinstance(expr, BoolOp):
        left = bool(_eval_expr(expr.left, graph, binding))
        right = bool(_eval_expr(expr.right, graph, binding))
        return (left and right) if expr.op == "AND" else (left or right)
    if isinstance(expr, NotOp):
        return not bool(_eval_expr(expr.operand, graph, binding))
    raise TypeError(f"unsupported expression {expr!r}")


def _compare(op: str, left, right) -> bool:
    if left is None or right is None:
        return False
    if op == "=":
        return _eq(left, right)
    if op == "<>":
        return not _eq(left, right)
    if not _orderable(left, right):
        return False
    if op == "<":
        return left < right
    if op == ">":
        return left > right
    if op == "<=":
        return left <= right
    if op == ">=":
        return left >= right
    raise ValueError(f"unknown operator {op!r}")


def _eq(left, right) -> bool:
    if isinstance(left, bool) != isinstance(right, bool):
        return False
    return left == right


def _orderable(left, right) -> bool:
    numeric = (int, float)
    if isinstance(left, bool) or isinstance(right, bool):
        return False
    if isinstance(left, numeric) and isinstance(right, numeric):
        return True
    return isinstance(left, str) and isinstance(right, str)


def _project_cell(expr, graph: PropertyGraph, binding: dict):
    if isinstance(expr, VariableRef):
        kind, entity = _lookup(graph, binding, expr.name)
        if kind == "node":
            return NodeRef(entity.id, list(entity.labels), dict(entity.properties))
        if kind == "edge":
            return EdgeRef(entity.id, entity.edge_type)
        if kind == "edges":
            return [EdgeRef(e.id, e.edge_type) for e in entity]
        return None
    return _eval_expr(expr, graph, binding)


def _column_name(item) -> str:
    if item.alias:
        return item.alias
    expr = item.expression
    if isinstance(expr, CountCall):
        if expr.argument is None:
            return "count(*)"
        return f"count({_column_name_expr(expr.argument)})"
    return _column_name_expr(expr)


def _column_name_expr(expr) -> str:
    if isinstance(expr, VariableRef):
        return expr.name
    if isinstance(expr, PropertyAccess):
        return f"{expr.variable}.{expr.name}"
    if isinstance(expr, LabelTest):
        return f"{expr.variable}:{expr.label}"
    if isinstance(expr, Literal):
        return render_cell(expr.value)
    return "expr"


def execute_query(
    ast: QueryAst, graph: PropertyGraph, hop_ceiling: int = DEFAULT_HOP_CEILING
) -> ResultTable:
    for pattern in ast.match_patterns:
        for rel in pattern.rel_patterns:
            if rel.var_length and rel.max_hops is not None and rel.max_hops > hop_ceiling:
                raise HopCeilingError(
                    f"hop range up to {rel.max_hops} exceeds ceiling {hop_ceiling}"
                )

    warnings = _schema_warnings(ast, graph.schema())
    matcher = _Matcher(graph, hop_ceiling)

    bindings: list[dict] = [{}]
    for pattern in ast.match_patterns:
        next_bindings: list[dict] = []
        for binding in bindings:
            next_bindings.extend(matcher.match_pattern(pattern, binding))
        bindings = next_bindings

    if ast.where_clause is not None:
        bindings = [b for b in bindings if bool(_eval_expr(ast.where_clause, graph, b))]

    declared = _declared_variables(ast)
    bindings.sort(key=lambda b: tuple(_entity_sort_key(b.get(v, "")) for v in declared))

    columns = [_column_name(item) for item in ast.return_items]
    count_items = [i for i, item in enumerate(ast.return_items) if isinstance(item.expression, CountCall)]

    if count_items:
        rows = _aggregate_rows(ast, graph, bindings)
    else:
        rows = [
            [_project_cell(item.expression, graph, binding) for item in ast.return_items]
            for binding in bindings
        ]

    if ast.limit is not None:
        rows = rows[: ast.limit]
    return ResultTable(columns, rows, warnings)


def _aggregate_rows(ast: QueryAst, graph: PropertyGraph, bindings: list[dict]) -> list[list]:
    """COUNT with implicit grouping over the non-aggregate return items."""
    plain = [item for item in ast.return_items if not isinstance(item.expression, CountCall)]
    groups: dict[str, dict] = {}
    order: list[str] = []
    for binding in bindings:
        cells = [_project_cell(item.expression, graph, binding) for item in plain]
        key = json.dumps([render_cell(c) for c in cells], ensure_ascii=False)
        if key not in groups:
            groups[key] = {"cells": cells, "bindings": []}
            order.append(key)
        groups[key]["bindings"].append(binding)

    if not plain and not groups:
        groups[""] = {"cells": [], "bindings": []}
        order.append("")

    rows = []
    for key in sorted(order):
        group = groups[key]
        row = []
        plain_iter = iter(group["cells"])
        for item in ast.return_items:
            if isinstance(item.expression, CountCall):
                row.append(_count_value(item.expression, graph, group["bindings"]))
            else:
                row.append(next(plain_iter))
        rows.append(row)
    return rows


def _count_value(call: CountCall, graph: PropertyGraph, bindings: list[dict]) -> int:
    if call.argument is None:
        return len(bindings)
    return sum(1 for b in bindings if _eval_expr(call.argument, graph, b) is not None)


def render_schema_context(schema: GraphSchema) -> str:
    """Compact deterministic schema text for prompt injection."""
    lines = ["Node labels and properties:"]
    for label in sorted(schema.node_labels):
        props = sorted(schema.properties_by_label.get(label, ()))
        lines.append(f"  {label}: {', '.join(props) if props else '(none)'}")
    lines.append("Edge types:")
    for edge_type in sorted(schema.edge_types):
        lines.append(f"  {edge_type}")
    return "\n".join(lines)
