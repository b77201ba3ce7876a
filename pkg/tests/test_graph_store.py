import math

import pytest

from pidgraph.errors import ConflictError, NotFoundError, ValidationError
from pidgraph.graph import (
    AbstractionLevel,
    Edge,
    EdgeKind,
    Node,
    PropertyGraph,
    is_has_type,
    render_properties,
    validate_property_value,
)


def test_add_node_identity():
    g = PropertyGraph()
    g.add_node(Node("n1", ["Tank"]))
    assert len(g) == 1
    assert g.get_node("n1").labels == ["Tank"]


def test_add_node_duplicate_id_conflicts():
    g = PropertyGraph()
    g.add_node(Node("n1", ["Tank"]))
    with pytest.raises(ConflictError):
        g.add_node(Node("n1", ["Pump"]))


def test_node_properties_round_trip_losslessly():
    g = PropertyGraph()
    g.add_node(Node("n1", ["Tank", "Vessel"], {"length": 4.0, "count": 2, "ok": True, "name": "T"}))
    node = g.get_node("n1")
    assert node.properties == {"length": 4.0, "count": 2, "ok": True, "name": "T"}
    assert isinstance(node.properties["length"], float)
    assert isinstance(node.properties["count"], int)


def test_node_requires_label():
    g = PropertyGraph()
    with pytest.raises(ValidationError):
        g.add_node(Node("n1", []))


@pytest.mark.parametrize("bad", [float("nan"), float("inf"), [1, "a"], {"x": 1}, [1.0, float("nan")]])
def test_property_value_rejections(bad):
    with pytest.raises(ValidationError):
        validate_property_value(bad)


def test_property_value_accepts_homogeneous_nested():
    assert validate_property_value([1, 2, 3]) == [1, 2, 3]
    assert validate_property_value([[1], [2, 3]]) == [[1], [2, 3]]
    assert math.isclose(validate_property_value(1.5), 1.5)


def test_edge_kind_must_match_has_type():
    g = PropertyGraph()
    g.add_node(Node("a", ["X"]))
    g.add_node(Node("b", ["X"]))
    with pytest.raises(ValidationError):
        g.add_edge(Edge("e1", "a", "b", "has", EdgeKind.REFERENCE))
    with pytest.raises(ValidationError):
        g.add_edge(Edge("e2", "a", "b", "send_to", EdgeKind.COMPOSITIONAL))
    g.add_edge(Edge("e3", "a", "b", "has", EdgeKind.COMPOSITIONAL))
    g.add_edge(Edge("e4", "a", "b", "send_to", EdgeKind.REFERENCE))


def test_is_has_type_variants():
    assert is_has_type("has")
    assert is_has_type("hasNozzle")
    assert is_has_type("has_part")
    assert not is_has_type("hash")  # lowercase continuation is not a has-type
    assert not is_has_type("send_to")
    assert not is_has_type("CONNECTED_TO")


def test_edge_endpoints_must_exist():
    g = PropertyGraph()
    g.add_node(Node("a", ["X"]))
    with pytest.raises(NotFoundError):
        g.add_edge(Edge("e1", "a", "missing", "send_to", EdgeKind.REFERENCE))


def test_get_neighbors_star(star_graph):
    # Oracle: the star fixture has exactly edges e1..e3 center->leaf{i}.
    triples = star_graph.get_neighbors("center")
    assert [(n.id, e.id, d) for n, e, d in triples] == [
        ("leaf1", "e1", "out"),
        ("leaf2", "e2", "out"),
        ("leaf3", "e3", "out"),
    ]
    assert star_graph.get_neighbors("leaf1") == [
        (star_graph.get_node("center"), star_graph.edges["e1"], "in")
    ]


def test_get_neighbors_exclusion_and_isolated(star_graph):
    assert star_graph.get_neighbors("center", exclude={"leaf1", "leaf2", "leaf3"}) == []
    star_graph.add_node(Node("island", ["Leaf"]))
    assert star_graph.get_neighbors("island") == []
    with pytest.raises(NotFoundError):
        star_graph.get_neighbors("nope")


def test_get_node_context_minimal_and_semantics():
    g = PropertyGraph()
    g.add_node(Node("n1", ["Tank"]))
    assert "Tank" in g.get_node_context("n1")

    node = Node("n2", ["Pump"], {"tagName": "P1"})
    node.local_semantic = "local role description"
    node.global_embedding = [0.5] * g.embedding_dim
    g.add_node(node)
    context = g.get_node_context("n2")
    assert "local role description" in context
    assert "0.5" not in context  # embeddings excluded
    with pytest.raises(NotFoundError):
        g.get_node_context("missing")


def test_schema_inventory(star_graph):
    schema = star_graph.schema()
    assert schema.node_labels == {"Hub", "Leaf"}
    assert schema.edge_types == {"send_to"}
    assert schema.properties_by_label["Leaf"] == {"index"}

    empty = PropertyGraph().schema()
    assert empty.node_labels == set() and empty.edge_types == set()

    star_graph.add_node(Node("x", ["Gauge"]))
    assert "Gauge" in star_graph.schema().node_labels


def test_schema_soundness_matches_graph(demo_graph):
    schema = demo_graph.schema()
    in_graph_labels = {l for n in demo_graph.nodes.values() for l in n.labels}
    assert schema.node_labels == in_graph_labels
    assert schema.edge_types == {e.edge_type for e in demo_graph.edges.values()}
    for label, props in schema.properties_by_label.items():
        occurring = set()
        for node in demo_graph.nodes.values():
            if label in node.labels:
                occurring |= set(node.properties)
        assert props == occurring


def test_remove_node_removes_incident_edges(star_graph):
    star_graph.remove_node("leaf1")
    star_graph.check_integrity()
    assert "e1" not in star_graph.edges
    assert len(star_graph.get_neighbors("center")) == 2


def test_embedding_dimension_enforced():
    g = PropertyGraph(embedding_dim=4)
    node = Node("n1", ["Tank"])
    node.global_embedding = [0.1, 0.2]
    with pytest.raises(ValidationError):
        g.add_node(node)


def test_copy_is_independent(star_graph):
    clone = star_graph.copy()
    clone.remove_node("leaf1")
    assert "leaf1" in star_graph.nodes
    clone.get_node("center").properties["new"] = 1
    assert "new" not in star_graph.get_node("center").properties


def test_mint_id_unique(star_graph):
    a = star_graph.mint_id()
    b = star_graph.mint_id()
    assert a != b and a.startswith("gen:")


def test_render_properties_insertion_order():
    assert render_properties({"b": 1, "a": "x"}) == '{"b": 1, "a": "x"}'


def test_abstraction_level_order():
    assert AbstractionLevel.COMPLETE < AbstractionLevel.PROCESS < AbstractionLevel.CONCEPTUAL
