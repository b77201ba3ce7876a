import pytest

from pidgraph.demo import build_demo_flowsheet, build_demo_provider
from pidgraph.enrichment import enrich_graph
from pidgraph.graph import AbstractionLevel, Edge, EdgeKind, Node, PropertyGraph
from pidgraph.llm import Gateway, LlmHandle, MockChatModel, MockEmbedder
from pidgraph.vectors import build_indexes


def make_gateway(provider=None, dim=1024):
    return Gateway(provider or MockChatModel(), MockEmbedder(dim=dim))


def make_llm(provider=None, dim=1024, model="mock-chat"):
    return LlmHandle(make_gateway(provider, dim), model)


@pytest.fixture
def star_graph():
    g = PropertyGraph()
    g.add_node(Node("center", ["Hub"]))
    for i in (1, 2, 3):
        g.add_node(Node(f"leaf{i}", ["Leaf"], {"index": i}))
        g.add_edge(Edge(f"e{i}", "center", f"leaf{i}", "send_to", EdgeKind.REFERENCE))
    return g


@pytest.fixture
def chain_graph():
    """Pump -has-> Segment -has-> Valve -has-> Pipe -has-> Tank."""
    g = PropertyGraph(AbstractionLevel.COMPLETE)
    g.add_node(Node("pump", ["Pump", "Equipment"], {"tagName": "P1"}))
    g.add_node(Node("seg", ["PipingNetworkSegment"], {"segmentNumber": 1}))
    g.add_node(Node("valve", ["GlobeValve"], {"tagName": "V1"}))
    g.add_node(Node("pipe", ["Pipe"], {"length": 2.0}))
    g.add_node(Node("tank", ["Tank", "Equipment"], {"tagName": "T1"}))
    for i, (src, dst) in enumerate([("pump", "seg"), ("seg", "valve"), ("valve", "pipe"), ("pipe", "tank")]):
        g.add_edge(Edge(f"h{i}", src, dst, "has", EdgeKind.COMPOSITIONAL))
    return g


@pytest.fixture
def demo_graph():
    return build_demo_flowsheet()


@pytest.fixture(scope="session")
def enriched_demo():
    """Demo flowsheet enriched offline: semantics + hash embeddings + indexes."""
    graph = build_demo_flowsheet()
    llm = LlmHandle(Gateway(build_demo_provider(), MockEmbedder(dim=1024)), "mock-chat")
    report = enrich_graph(graph, llm)
    assert not report.errors
    return graph, build_indexes(graph)
