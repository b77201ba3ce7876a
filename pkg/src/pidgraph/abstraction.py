"""Deterministic condensation of a flowsheet graph into coarser abstraction levels.

Each level applies three passes driven by a rule set: prune bookkeeping nodes
outright, collapse low-information nodes into their surroundings, and drop
non-process properties. Collapsing reconnects in-neighbors to out-neighbors
with CONNECTED_TO reference edges, so chains of pass-through nodes shrink to a
single edge and process components end up directly connected.
"""

from __future__ import annotations

import fnmatch
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .errors import InvalidTransitionError, ValidationError
from .graph import AbstractionLevel, Edge, EdgeKind, PropertyGraph, is_has_type

CONNECTED_TO = "CONNECTED_TO"


@dataclass
class CondensationRuleSet:
    prune_labels: set[str] = field(default_factory=set)
    collapse_labels: set[str] = field(default_factory=set)
    drop_properties: set[str] = field(default_factory=set)

    def __post_init__(self):
        overlap = self.prune_labels & self.collapse_labels
        if overlap:
            raise ValidationError(f"labels both pruned and collapsed: {sorted(overlap)}")

    def drops_property(self, name: str) -> bool:
        return any(fnmatch.fnmatchcase(name, pattern) for pattern in self.drop_properties)


DEFAULT_RULES_RESOURCE = Path(__file__).parent / "data" / "condensation_rules.yaml"


def load_rule_sets(path: Path | str | None = None) -> dict[AbstractionLevel, CondensationRuleSet]:
    """Load per-level rule sets from a YAML file (key -> list mapping)."""
    path = Path(path) if path is not None else DEFAULT_RULES_RESOURCE
    raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    rule_sets = {}
    for level_name, section in raw.items():
        level = AbstractionLevel(level_name)
        section = section or {}
        rule_sets[level] = CondensationRuleSet(
            prune_labels=set(section.get("prune_labels") or []),
            collapse_labels=set(section.get("collapse_labels") or []),
            drop_properties=set(section.get("drop_properties") or []),
        )
    return rule_sets


def _matches(node_labels: list[str], label_set: set[str]) -> bool:
    return any(label in label_set for label in node_labels)


def _apply_pass(graph: PropertyGraph, rules: CondensationRuleSet) -> PropertyGraph:
    work = graph.copy()

    for node_id in sorted(work.nodes):
        if _matches(work.nodes[node_id].labels, rules.prune_labels):
            work.remove_node(node_id)

    collapse_ids = [
        node_id
        for node_id in sorted(work.nodes)
        if _matches(work.nodes[node_id].labels, rules.collapse_labels)
    ]
    collapse_set = set(collapse_ids)

    for node_id in collapse_ids:
        node = work.nodes[node_id]
        in_edges = work.in_edges(node_id)
        out_edges = work.out_edges(node_id)

        if node.properties:
            parent_id = _merge_target(work, node_id, collapse_set)
            if parent_id is not None:
                parent = work.nodes[parent_id]
                prefix = f"{node.primary_label}."
                for name, value in node.properties.items():
                    merged = prefix + name
                    if merged not in parent.properties:
                        parent.properties[merged] = value

        for incoming in in_edges:
            for outgoing in out_edges:
                u, v = incoming.source, outgoing.target
                if u == v or u == node_id or v == node_id:
                    continue
                if work.has_edge_between(u, v):
                    continue
                work.add_edge(
                    Edge(work.mint_id(), u, v, CONNECTED_TO, EdgeKind.REFERENCE)
                )
        work.remove_node(node_id)

    for node in work.nodes.values():
        for name in [n for n in node.properties if rules.drops_property(n)]:
            del node.properties[name]

    return work


def _merge_target(graph: PropertyGraph, node_id: str, collapse_set: set[str]) -> str | None:
    """Surviving node that inherits a collapsed node's properties.

    Preference: source of the first incoming has-type edge, then any other
    surviving neighbor, ordered by edge id. None when no neighbor survives the
    pass; the properties are then dropped (documented as lossy).
    """
    has_parents = [
        edge.source
        for edge in graph.in_edges(node_id)
        if is_has_type(edge.edge_type) and edge.source not in collapse_set
    ]
    if has_parents:
        return has_parents[0]
    for neighbor, _edge, _direction in graph.get_neighbors(node_id):
        if neighbor.id not in collapse_set:
            return neighbor.id
    return None


def condense(
    graph: PropertyGraph,
    target: AbstractionLevel,
    rule_sets: dict[AbstractionLevel, CondensationRuleSet] | None = None,
) -> PropertyGraph:
    """Condense a graph to a strictly higher abstraction level.

    Intermediate levels are applied in order, so complete -> conceptual runs
    the process pass first. Pure function of (graph, rule sets).
    """
    if graph.abstraction_level.rank >= target.rank:
        raise InvalidTransitionError(
            f"graph already at {graph.abstraction_level.value}; cannot condense to {target.value}"
        )
    if rule_sets is None:
        rule_sets = load_rule_sets()

    work = graph
    for level in (AbstractionLevel.PROCESS, AbstractionLevel.CONCEPTUAL):
        if work.abstraction_level.rank < level.rank <= target.rank:
            rules = rule_sets.get(level, CondensationRuleSet())
            work = _apply_pass(work, rules)
            work.abstraction_level = level
    work.check_integrity()
    return work


def reachability_equivalent(a: PropertyGraph, b: PropertyGraph, node_class: str) -> bool:
    """True iff undirected connectivity between node_class nodes matches in both.

    Nodes are matched by id; a pair connected by any path (edge direction
    ignored) in one graph must be connected in the other and vice versa.
    """
    ids_a = {n.id for n in a.nodes.values() if node_class in n.labels}
    ids_b = {n.id for n in b.nodes.values() if node_class in n.labels}
    if ids_a != ids_b:
        return False
    for start in sorted(ids_a):
        reach_a = _reachable(a, start) & ids_a
        reach_b = _reachable(b, start) & ids_b
        if reach_a != reach_b:
            return False
    return True


def _reachable(graph: PropertyGraph, start: str) -> set[str]:
    seen = {start}
    frontier = [start]
    while frontier:
        current = frontier.pop()
        for neighbor, _edge, _direction in graph.get_neighbors(current):
            if neighbor.id not in seen:
                seen.add(neighbor.id)
                frontier.append(neighbor.id)
    return seen
