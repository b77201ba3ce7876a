import pytest
import yaml

from helpers import class_reachability_map
from pidgraph.abstraction import (
    CONNECTED_TO,
    CondensationRuleSet,
    condense,
    load_rule_sets,
    reachability_equivalent,
)
from pidgraph.errors import InvalidTransitionError, ValidationError
from pidgraph.graph import AbstractionLevel, Edge, EdgeKind, Node, PropertyGraph
from pidgraph.graphml import export_graphml

CHAIN_RULES = {
    AbstractionLevel.PROCESS: CondensationRuleSet(
        collapse_labels={"PipingNetworkSegment", "Pipe"},
        drop_properties={"uri"},
    ),
    AbstractionLevel.CONCEPTUAL: CondensationRuleSet(),
}


def test_chain_condenses_to_direct_connectivity(chain_graph):
    # Hand-derived expectation: Segment and Pipe collapse away, leaving
    # pump -> valve -> tank connected directly.
    result = condense(chain_graph, AbstractionLevel.PROCESS, CHAIN_RULES)
    assert set(result.nodes) == {"pump", "valve", "tank"}
    assert result.abstraction_level is AbstractionLevel.PROCESS
    pairs = {(e.source, e.target) for e in result.edges.values()}
    assert pairs == {("pump", "valve"), ("valve", "tank")}
    for edge in result.edges.values():
        assert edge.edge_type == CONNECTED_TO
        assert edge.kind is EdgeKind.REFERENCE


def test_collapsed_properties_merge_with_label_prefix(chain_graph):
    result = condense(chain_graph, AbstractionLevel.PROCESS, CHAIN_RULES)
    # Segment merges into its has-parent (pump); pipe's has-parent is the
    # collapsed segment, so it falls back to a surviving neighbor (valve).
    assert result.nodes["pump"].properties["PipingNetworkSegment.segmentNumber"] == 1
    assert result.nodes["valve"].properties["Pipe.length"] == 2.0


def test_conflicting_merge_keeps_parent_value():
    g = PropertyGraph(AbstractionLevel.COMPLETE)
    g.add_node(Node("parent", ["Tank"], {"Chamber.material": "keep-me"}))
    g.add_node(Node("ch", ["Chamber"], {"material": "discard"}))
    g.add_edge(Edge("h1", "parent", "ch", "has", EdgeKind.COMPOSITIONAL))
    rules = {
        AbstractionLevel.PROCESS: CondensationRuleSet(collapse_labels={"Chamber"}),
    }
    result = condense(g, AbstractionLevel.PROCESS, rules)
    assert result.nodes["parent"].properties["Chamber.material"] == "keep-me"


def test_already_at_target_is_invalid_transition(chain_graph):
    conceptual = condense(chain_graph, AbstractionLevel.CONCEPTUAL, CHAIN_RULES)
    with pytest.raises(InvalidTransitionError):
        condense(conceptual, AbstractionLevel.CONCEPTUAL, CHAIN_RULES)
    with pytest.raises(InvalidTransitionError):
        condense(conceptual, AbstractionLevel.PROCESS, CHAIN_RULES)


def test_no_matching_rules_is_fixed_point(star_graph):
    rules = {AbstractionLevel.PROCESS: CondensationRuleSet(drop_properties={"nonexistent*"})}
    result = condense(star_graph, AbstractionLevel.PROCESS, rules)
    assert set(result.nodes) == set(star_graph.nodes)
    assert set(result.edges) == set(star_graph.edges)
    for nid in result.nodes:
        assert result.nodes[nid].properties == star_graph.nodes[nid].properties


def test_condense_is_pure_and_deterministic(demo_graph):
    rules = load_rule_sets()
    before_nodes = set(demo_graph.nodes)
    a = condense(demo_graph, AbstractionLevel.CONCEPTUAL, rules)
    assert set(demo_graph.nodes) == before_nodes  # input untouched
    b = condense(demo_graph, AbstractionLevel.CONCEPTUAL, rules)
    assert export_graphml(a, True) == export_graphml(b, True)


def test_prune_and_drop_properties(demo_graph):
    rules = load_rule_sets()
    process = condense(demo_graph, AbstractionLevel.PROCESS, rules)
    assert not any("ConnectionPoints" in n.labels for n in process.nodes.values())
    assert not any("DrawingBorder" in n.labels for n in process.nodes.values())
    for node in process.nodes.values():
        assert "uri" not in node.properties
        assert "internalId" not in node.properties
        assert "x" not in node.properties


def test_monotone_shrinkage_on_demo(demo_graph):
    rules = load_rule_sets()
    process = condense(demo_graph, AbstractionLevel.PROCESS, rules)
    conceptual = condense(process, AbstractionLevel.CONCEPTUAL, rules)
    assert len(demo_graph.nodes) > len(process.nodes) > len(conceptual.nodes)
    sizes = [len(export_graphml(g, False)) for g in (demo_graph, process, conceptual)]
    assert sizes[0] > sizes[1] > sizes[2]


def test_reachability_equivalent_reflexive(demo_graph):
    assert reachability_equivalent(demo_graph, demo_graph, "Equipment")


def test_reachability_preserved_by_condensation(demo_graph):
    rules = load_rule_sets()
    process = condense(demo_graph, AbstractionLevel.PROCESS, rules)
    conceptual = condense(process, AbstractionLevel.CONCEPTUAL, rules)
    # Independent BFS oracle agrees with the module's verdict.
    assert class_reachability_map(demo_graph, "Equipment") == class_reachability_map(process, "Equipment")
    assert class_reachability_map(process, "Equipment") == class_reachability_map(conceptual, "Equipment")
    assert reachability_equivalent(demo_graph, process, "Equipment")
    assert reachability_equivalent(process, conceptual, "Equipment")


def test_reachability_detects_broken_edge(demo_graph):
    rules = load_rule_sets()
    process = condense(demo_graph, AbstractionLevel.PROCESS, rules)
    broken = process.copy()
    # Remove every edge on the tank->exchanger line (BVa sits between them).
    for eid in list(broken.edges):
        edge = broken.edges[eid]
        if "BVa" in (edge.source, edge.target):
            broken.remove_edge(eid)
    oracle_differs = class_reachability_map(process, "Equipment") != class_reachability_map(broken, "Equipment")
    assert oracle_differs
    assert not reachability_equivalent(process, broken, "Equipment")


def test_rule_set_rejects_overlap():
    with pytest.raises(ValidationError):
        CondensationRuleSet(prune_labels={"X"}, collapse_labels={"X"})


def test_rule_sets_load_from_file(tmp_path):
    path = tmp_path / "rules.yaml"
    path.write_text(
        yaml.safe_dump(
            {
                "process": {"prune_labels": ["A"], "collapse_labels": ["B"], "drop_properties": ["x*"]},
                "conceptual": {"collapse_labels": ["C"]},
            }
        ),
        encoding="utf-8",
    )
    rules = load_rule_sets(path)
    assert rules[AbstractionLevel.PROCESS].prune_labels == {"A"}
    assert rules[AbstractionLevel.PROCESS].drops_property("xyz")
    assert not rules[AbstractionLevel.PROCESS].drops_property("y")
    assert rules[AbstractionLevel.CONCEPTUAL].collapse_labels == {"C"}
