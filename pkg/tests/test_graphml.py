import random

import pytest

from helpers import graphs_equal, random_graph
from pidgraph.errors import GraphMlParseError, GraphMlSchemaError
from pidgraph.graph import AbstractionLevel, Edge, EdgeKind, Node, PropertyGraph
from pidgraph.graphml import (
    apply_embeddings_sidecar,
    export_embeddings_sidecar,
    export_graphml,
    format_embedding,
    import_graphml,
    load_graph,
    parse_embedding,
    save_graph,
)


def five_node_fixture():
    g = PropertyGraph(AbstractionLevel.PROCESS, embedding_dim=4)
    g.add_node(Node("a", ["Tank", "Vessel"], {"length": 4.0, "name": "T1", "modes": ["x", "y"]}))
    g.add_node(Node("b", ["Pump"], {"rate": 10, "running": True}))
    g.add_node(Node("c", ["GlobeValve"], {"dn": 50}))
    node_d = Node("d", ["Sensor"], {"note": 'quotes " and <tags> & ampersands'})
    node_d.global_semantic = "multi\nline semantic"
    node_d.local_semantic = "local one"
    node_d.global_embedding = [0.125, -2.5, 3.0e-7, 1.0]
    node_d.local_embedding = [1.0, 2.0, 3.0, 4.0]
    g.add_node(node_d)
    g.add_node(Node("e", ["Pipe"], {}))
    g.add_edge(Edge("e1", "a", "b", "send_to", EdgeKind.REFERENCE, {"flow": 10}))
    g.add_edge(Edge("e2", "b", "c", "has", EdgeKind.COMPOSITIONAL))
    g.add_edge(Edge("e3", "c", "d", "CONNECTED_TO", EdgeKind.REFERENCE))
    g.add_edge(Edge("e4", "d", "e", "control", EdgeKind.REFERENCE, {"weight": 0.5}))
    return g


def test_round_trip_five_node_fixture():
    g = five_node_fixture()
    data = export_graphml(g, include_embeddings=True)
    g2 = import_graphml(data)
    assert graphs_equal(g, g2)


def test_export_is_byte_deterministic():
    g = five_node_fixture()
    assert export_graphml(g, True) == export_graphml(g, True)
    assert export_graphml(g, False) == export_graphml(g, False)


def test_export_without_embeddings_drops_vectors():
    g = five_node_fixture()
    g2 = import_graphml(export_graphml(g, include_embeddings=False))
    assert g2.nodes["d"].global_embedding is None
    assert g2.nodes["d"].global_semantic == "multi\nline semantic"


def test_appendix_style_embedding_key_parses_to_vector():
    values = [random.Random(7).uniform(-0.05, 0.05) for _ in range(1024)]
    payload = "[" + ",".join(repr(v) for v in values) + "]"
    g = PropertyGraph(embedding_dim=1024)
    xml = f"""<?xml version="1.0" encoding="UTF-8"?>
<graphml>
  <key id="global_semantic_embedding" for="node" attr.name="global_semantic_embedding" attr.type="string"/>
  <graph id="flowsheet" edgedefault="directed">
    <data key="embedding_dim">1024</data>
    <node id="T4750" labels=":Tank">
      <data key="global_semantic_embedding">{payload}</data>
    </node>
  </graph>
</graphml>
"""
    parsed = import_graphml(xml.encode("utf-8"))
    vector = parsed.nodes["T4750"].global_embedding
    assert len(vector) == 1024
    assert vector == values


def test_embedding_text_round_trip():
    vec = [0.016520526, -0.014927468, -0.020687385, 1e-300, -1.5]
    assert parse_embedding(format_embedding(vec)) == vec
    # Tolerates line wraps as in hand-edited files.
    assert parse_embedding("[0.1,\n-0.2,0.3]") == [0.1, -0.2, 0.3]


def test_truncated_file_is_parse_error_with_position():
    data = export_graphml(five_node_fixture(), True)
    with pytest.raises(GraphMlParseError) as exc_info:
        import_graphml(data[: len(data) // 2])
    assert exc_info.value.line is not None


def test_unknown_key_is_schema_error():
    xml = b"""<?xml version="1.0"?>
<graphml><graph id="g" edgedefault="directed">
<node id="a" labels=":X"><data key="mystery">1</data></node>
</graph></graphml>"""
    with pytest.raises(GraphMlSchemaError):
        import_graphml(xml)


def test_dangling_edge_rejected():
    xml = b"""<?xml version="1.0"?>
<graphml><graph id="g" edgedefault="directed">
<node id="a" labels=":X"/>
<edge id="e" source="a" target="ghost" label="send_to" kind="reference"/>
</graph></graphml>"""
    with pytest.raises(Exception):
        import_graphml(xml)


def test_reserved_property_name_rejected_on_export():
    g = PropertyGraph()
    g.add_node(Node("a", ["X"], {"global_semantic": "clash"}))
    with pytest.raises(GraphMlSchemaError):
        export_graphml(g, True)


def test_mixed_type_property_names_survive():
    g = PropertyGraph()
    g.add_node(Node("a", ["X"], {"value": 1}))
    g.add_node(Node("b", ["X"], {"value": "one"}))
    g2 = import_graphml(export_graphml(g, True))
    assert g2.nodes["a"].properties["value"] == 1
    assert g2.nodes["b"].properties["value"] == "one"


def test_namespaced_graphml_accepted():
    g = five_node_fixture()
    data = export_graphml(g, True)
    assert b'xmlns="http://graphml.graphdrawing.org/xmlns"' in data
    assert graphs_equal(g, import_graphml(data))


def test_randomized_round_trips():
    rng = random.Random(20240811)
    for _ in range(10):
        g = random_graph(rng, max_nodes=40)
        data = export_graphml(g, True)
        assert graphs_equal(g, import_graphml(data))
        assert data == export_graphml(g, True)


def test_embeddings_sidecar_round_trip(tmp_path):
    g = five_node_fixture()
    bare = import_graphml(export_graphml(g, include_embeddings=False))
    apply_embeddings_sidecar(bare, export_embeddings_sidecar(g))
    assert graphs_equal(g, bare)

    path = tmp_path / "g.graphml"
    save_graph(g, path, sidecar=True)
    assert (tmp_path / "g.graphml.emb").exists()
    assert b'<data key="global_semantic_embedding">' not in path.read_bytes()
    assert graphs_equal(g, load_graph(path))


def test_sidecar_dimension_mismatch_rejected():
    g = five_node_fixture()
    sidecar = export_embeddings_sidecar(g)
    other = PropertyGraph(embedding_dim=8)
    other.add_node(Node("d", ["Sensor"]))
    with pytest.raises(GraphMlSchemaError):
        apply_embeddings_sidecar(other, sidecar)


def test_demo_graphml_resource_matches_builder():
    # The shipped data file must never drift from the builder output.
    from pidgraph.demo import DEMO_GRAPH_RESOURCE, build_demo_flowsheet

    assert DEMO_GRAPH_RESOURCE.exists(), "run scripts/make_demo_graphml.py"
    assert DEMO_GRAPH_RESOURCE.read_bytes() == export_graphml(build_demo_flowsheet(), True)
