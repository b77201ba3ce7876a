"""Independent oracles and generators used by the test suite.

Everything here is deliberately written without reusing the implementation
paths it checks: reachability is a plain BFS, top-k is an exhaustive sort,
and the query oracle enumerates candidate assignments brute-force.
"""

from __future__ import annotations

import itertools
import math
import random
import string

from pidgraph.cypher.ast import (
    BoolOp,
    Comparison,
    CountCall,
    LabelTest,
    Literal,
    NotOp,
    PropertyAccess,
    VariableRef,
)
from pidgraph.cypher.executor import EdgeRef, NodeRef
from pidgraph.graph import AbstractionLevel, Edge, EdgeKind, Node, PropertyGraph

# -- BFS reachability oracle ---------------------------------------------------


def bfs_reachable(graph: PropertyGraph, start: str) -> set[str]:
    seen = {start}
    frontier = [start]
    while frontier:
        nid = frontier.pop(0)
        for edge in graph.edges.values():
            for a, b in ((edge.source, edge.target), (edge.target, edge.source)):
                if a == nid and b not in seen:
                    seen.add(b)
                    frontier.append(b)
    return seen


def class_reachability_map(graph: PropertyGraph, label: str) -> dict[str, frozenset[str]]:
    ids = sorted(n.id for n in graph.nodes.values() if label in n.labels)
    return {nid: frozenset(bfs_reachable(graph, nid) & set(ids)) for nid in ids}


# -- cosine / top-k oracles ------------------------------------------------------


def cosine_oracle(a, b) -> float:
    dot = math.fsum(x * y for x, y in zip(a, b))
    na = math.sqrt(math.fsum(x * x for x in a))
    nb = math.sqrt(math.fsum(y * y for y in b))
    return dot / (na * nb)


def brute_force_top_k(entries, query, k) -> list[tuple[str, float]]:
    import numpy as np

    q = np.asarray(query, dtype=float)
    qn = float(np.linalg.norm(q))
    scored = []
    for node_id, vec in entries:
        v = np.asarray(vec, dtype=float)
        score = float(np.dot(v, q) / (float(np.linalg.norm(v)) * qn))
        scored.append((node_id, min(1.0, max(-1.0, score))))
    scored.sort(key=lambda item: (-item[1], item[0]))
    return scored[:k]


# -- random graph generator ------------------------------------------------------

_LABEL_POOL = ["Tank", "Pump", "GlobeValve", "Pipe", "Nozzle", "Sensor", "Vessel", "Equipment"]
_REFERENCE_TYPES = ["send_to", "control", "manipulate", "CONNECTED_TO"]
_HAS_TYPES = ["has", "hasNozzle", "has_part"]


def _rand_name(rng: random.Random) -> str:
    return "".join(rng.choice(string.ascii_lowercase) for _ in range(rng.randint(3, 8)))


def _rand_value(rng: random.Random, depth=0):
    roll = rng.random()
    if roll < 0.3:
        return _rand_name(rng) + rng.choice(["", " µ-unit", " \"quoted\" & <tagged>"])
    if roll < 0.5:
        return rng.randint(-1000, 1000)
    if roll < 0.7:
        return round(rng.uniform(-1e3, 1e3), 6)
    if roll < 0.85:
        return rng.random() < 0.5
    if depth >= 1:
        return rng.randint(0, 9)
    kind = rng.choice(["int", "float", "str"])
    make = {
        "int": lambda: rng.randint(0, 99),
        "float": lambda: round(rng.uniform(0, 9), 3),
        "str": lambda: _rand_name(rng),
    }[kind]
    return [make() for _ in range(rng.randint(0, 4))]


def random_graph(rng: random.Random, max_nodes: int = 100, dim: int = 8) -> PropertyGraph:
    g = PropertyGraph(
        abstraction_level=rng.choice(list(AbstractionLevel)),
        embedding_dim=dim,
    )
    n_nodes = rng.randint(1, max_nodes)
    for i in range(n_nodes):
        labels = rng.sample(_LABEL_POOL, rng.randint(1, 3))
        props = {_rand_name(rng): _rand_value(rng) for _ in range(rng.randint(0, 4))}
        node = Node(f"n{i}", labels, props)
        if rng.random() < 0.5:
            node.global_semantic = f"global text {i} with \n newline & <xml>"
            node.local_semantic = f"local text {i}"
        if rng.random() < 0.5:
            node.global_embedding = [rng.uniform(-1, 1) for _ in range(dim)]
        if rng.random() < 0.5:
            node.local_embedding = [rng.uniform(-1, 1) for _ in range(dim)]
        g.add_node(node)
    ids = list(g.nodes)
    for j in range(rng.randint(0, max(1, 2 * n_nodes))):
        src, dst = rng.choice(ids), rng.choice(ids)
        if rng.random() < 0.4:
            edge_type, kind = rng.choice(_HAS_TYPES), EdgeKind.COMPOSITIONAL
        else:
            edge_type, kind = rng.choice(_REFERENCE_TYPES), EdgeKind.REFERENCE
        props = {_rand_name(rng): _rand_value(rng)} if rng.random() < 0.3 else {}
        g.add_edge(Edge(f"e{j}", src, dst, edge_type, kind, props))
    return g


def graphs_equal(a: PropertyGraph, b: PropertyGraph) -> bool:
    """Id-matched isomorphism with equality of every field."""
    if a.abstraction_level != b.abstraction_level or a.embedding_dim != b.embedding_dim:
        return False
    if set(a.nodes) != set(b.nodes) or set(a.edges) != set(b.edges):
        return False
    for nid, node in a.nodes.items():
        other = b.nodes[nid]
        if (
            node.labels != other.labels
            or node.properties != other.properties
            or node.global_semantic != other.global_semantic
            or node.local_semantic != other.local_semantic
            or node.global_embedding != other.global_embedding
            or node.local_embedding != other.local_embedding
        ):
            return False
    for eid, edge in a.edges.items():
        other = b.edges[eid]
        if (
            edge.source != other.source
            or edge.target != other.target
            or edge.edge_type != other.edge_type
            or edge.kind != other.kind
            or edge.properties != other.properties
        ):
            return False
    return True


# -- naive query oracle ----------------------------------------------------------


def _node_ok(graph, nid, np) -> bool:
    node = graph.nodes[nid]
    if any(label not in node.labels for label in np.labels):
        return False
    return all(node.properties.get(k) == v for k, v in np.properties.items())


def _edge_matches(edge, rel, src, dst) -> bool:
    if rel.edge_type is not None and edge.edge_type != rel.edge_type:
        return False
    if rel.direction == "out":
        return edge.source == src and edge.target == dst
    if rel.direction == "in":
        return edge.source == dst and edge.target == src
    return (edge.source == src and edge.target == dst) or (
        edge.source == dst and edge.target == src
    )


def _walks(graph, rel, src, dst, ceiling) -> list[tuple[str, ...]]:
    if not rel.var_length:
        return [
            (eid,)
            for eid in sorted(graph.edges)
            if _edge_matches(graph.edges[eid], rel, src, dst)
        ]
    lo = rel.min_hops or 1
    hi = rel.max_hops if rel.max_hops is not None else ceiling
    found: list[tuple[str, ...]] = []

    def dfs(current, path):
        if lo <= len(path) <= hi and current == dst:
            found.append(tuple(path))
        if len(path) >= hi:
            return
        for eid in sorted(graph.edges):
            if eid in path:
                continue
            edge = graph.edges[eid]
            if rel.edge_type is not None and edge.edge_type != rel.edge_type:
                continue
            nxts = []
            if edge.source == current and rel.direction in ("out", "any"):
                nxts.append(edge.target)
            if edge.target == current and rel.direction in ("in", "any"):
                nxts.append(edge.source)
            for nxt in nxts:
                dfs(nxt, path + [eid])

    dfs(src, [])
    return found


def _pattern_assignments(graph, pattern, ceiling):
    nps = pattern.node_patterns
    rels = pattern.rel_patterns
    out = []
    for combo in itertools.product(sorted(graph.nodes), repeat=len(nps)):
        binding: dict = {}
        ok = True
        for np, nid in zip(nps, combo):
            if not _node_ok(graph, nid, np):
                ok = False
                break
            if np.variable:
                if np.variable in binding and binding[np.variable] != nid:
                    ok = False
                    break
                binding[np.variable] = nid
        if not ok:
            continue
        walk_options = [
            _walks(graph, rel, combo[i], combo[i + 1], ceiling) for i, rel in enumerate(rels)
        ]
        for walks in itertools.product(*walk_options):
            used: set[str] = set()
            clash = False
            for walk in walks:
                if used & set(walk):
                    clash = True
                    break
                used |= set(walk)
            if clash:
                continue
            b2 = dict(binding)
            ok2 = True
            for rel, walk in zip(rels, walks):
                if rel.variable:
                    value = list(walk) if rel.var_length else walk[0]
                    if rel.variable in b2 and b2[rel.variable] != value:
                        ok2 = False
                        break
                    b2[rel.variable] = value
            if ok2:
                out.append(b2)
    return out


def _oracle_eval(expr, graph, binding):
    if isinstance(expr, Literal):
        return expr.value
    if isinstance(expr, VariableRef):
        value = binding.get(expr.name)
        if isinstance(value, str) and value in graph.nodes:
            return ("node", value)
        if isinstance(value, str) and value in graph.edges:
            return ("edge", value)
        if isinstance(value, list):
            return ("edges", tuple(value))
        return None
    if isinstance(expr, PropertyAccess):
        value = binding.get(expr.variable)
        if isinstance(value, str):
            if value in graph.nodes:
                return graph.nodes[value].properties.get(expr.name)
            if value in graph.edges:
                return graph.edges[value].properties.get(expr.name)
        return None
    if isinstance(expr, LabelTest):
        value = binding.get(expr.variable)
        return isinstance(value, str) and value in graph.nodes and expr.label in graph.nodes[value].labels
    if isinstance(expr, Comparison):
        lv, rv = _oracle_eval(expr.left, graph, binding), _oracle_eval(expr.right, graph, binding)
        if lv is None or rv is None:
            return False
        if expr.op == "=":
            return type(lv) is type(rv) and lv == rv if isinstance(lv, bool) or isinstance(rv, bool) else lv == rv
        if expr.op == "<>":
            eq = type(lv) is type(rv) and lv == rv if isinstance(lv, bool) or isinstance(rv, bool) else lv == rv
            return not eq
        both_num = isinstance(lv, (int, float)) and isinstance(rv, (int, float)) and not (
            isinstance(lv, bool) or isinstance(rv, bool)
        )
        both_str = isinstance(lv, str) and isinstance(rv, str)
        if not (both_num or both_str):
            return False
        return {"<": lv < rv, ">": lv > rv, "<=": lv <= rv, ">=": lv >= rv}[expr.op]
    if isinstance(expr, BoolOp):
        lv, rv = bool(_oracle_eval(expr.left, graph, binding)), bool(_oracle_eval(expr.right, graph, binding))
        return (lv and rv) if expr.op == "AND" else (lv or rv)
    if isinstance(expr, NotOp):
        return not bool(_oracle_eval(expr.operand, graph, binding))
    raise AssertionError(f"oracle cannot evaluate {expr!r}")


def _sort_key(binding, declared):
    key = []
    for var in declared:
        value = binding.get(var, "")
        key.append(tuple(value) if isinstance(value, list) else (value,))
    return tuple(key)


def naive_query_rows(ast, graph, ceiling=8):
    """Brute-force evaluation of a parsed query; rows of comparable keys."""
    bindings = [{}]
    for pattern in ast.match_patterns:
        merged = []
        for base in bindings:
            for extra in _pattern_assignments(graph, pattern, ceiling):
                conflict = any(k in base and base[k] != v for k, v in extra.items())
                if not conflict:
                    merged.append({**base, **extra})
        bindings = merged
    if ast.where_clause is not None:
        bindings = [b for b in bindings if bool(_oracle_eval(ast.where_clause, graph, b))]

    declared = []
    for pattern in ast.match_patterns:
        for element in pattern.elements:
            if element.variable and element.variable not in declared:
                declared.append(element.variable)
    bindings.sort(key=lambda b: _sort_key(b, declared))

    count_exprs = [item for item in ast.return_items if isinstance(item.expression, CountCall)]
    if count_exprs:
        plain = [item for item in ast.return_items if not isinstance(item.expression, CountCall)]
        groups: dict = {}
        for b in bindings:
            key = tuple(repr(_oracle_eval(i.expression, graph, b)) for i in plain)
            groups.setdefault(key, {"cells": [_oracle_eval(i.expression, graph, b) for i in plain], "bs": []})
            groups[key]["bs"].append(b)
        rows = []
        for key in sorted(groups):
            grp = groups[key]
            row = []
            it = iter(grp["cells"])
            for item in ast.return_items:
                if isinstance(item.expression, CountCall):
                    if item.expression.argument is None:
                        row.append(len(grp["bs"]))
                    else:
                        row.append(
                            sum(
                                1
                                for b in grp["bs"]
                                if _oracle_eval(item.expression.argument, graph, b) is not None
                            )
                        )
                else:
                    row.append(next(it))
            rows.append(row)
    else:
        rows = [[_oracle_eval(i.expression, graph, b) for i in ast.return_items] for b in bindings]
    if ast.limit is not None:
        rows = rows[: ast.limit]
    return rows


def executor_cell_key(cell):
    """Map executor cells onto the oracle's comparable representation."""
    if isinstance(cell, NodeRef):
        return ("node", cell.node_id)
    if isinstance(cell, EdgeRef):
        return ("edge", cell.edge_id)
    if isinstance(cell, list) and cell and isinstance(cell[0], EdgeRef):
        # Var-length walks always have >= 1 edge, so an empty list is a
        # property value, not a walk.
        return ("edges", tuple(e.edge_id for e in cell))
    return cell
