"""Built-in demo flowsheet and a deterministic offline brain for it.

The flowsheet: a tank fed by two globe-valve lines, a pump, a plate heat
exchanger with a temperature-controlled cooling-water loop, and a safety valve
on a nitrogen blanket line. The builder emits the complete-level graph;
condense() derives the process and conceptual levels. Ships as
data/demo_flowsheet.graphml, which a test keeps in sync with this builder.

build_demo_provider() returns a scripted mock that answers every prompt shape
the system produces (tool selection, enrichment, path exploration, Cypher
generation, judging) with deterministic rule-based replies, so the whole stack
runs offline.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

from .graph import AbstractionLevel, Edge, EdgeKind, Node, PropertyGraph
from .llm import ChatRequest, MockChatModel, ScriptedReply, ToolCall

DEMO_GRAPH_RESOURCE = Path(__file__).parent / "data" / "demo_flowsheet.graphml"


def build_demo_flowsheet() -> PropertyGraph:
    g = PropertyGraph(AbstractionLevel.COMPLETE)
    counter = 0

    def node(node_id, labels, **properties):
        g.add_node(Node(id=node_id, labels=list(labels), properties=dict(properties)))

    def edge(source, target, edge_type, **properties):
        nonlocal counter
        counter += 1
        kind = EdgeKind.COMPOSITIONAL if edge_type == "has" else EdgeKind.REFERENCE
        g.add_edge(Edge(f"e{counter:03d}", source, target, edge_type, kind, dict(properties)))

    # Equipment
    node(
        "T4750",
        ["Tank", "Vessel", "Equipment"],
        tagName="T4750",
        length=4.0,
        form="cylindrical",
        designPressure=10.0,
        pressureUnit="bar",
        chamberCount=2,
        insulated=True,
        operatingModes=["filling", "draining"],
        uri="http://sandbox.dexpi.example/plant/T4750",
        internalId="c3f1a7e0-9b2d-4e52-8f1a-2f4f1f0a4750",
        x=412.0,
        y=188.0,
    )
    node(
        "P4712",
        ["CentrifugalPump", "Pump", "Equipment"],
        tagName="P4712",
        designVolumeFlowRate=10.0,
        flowRateUnit="m3/h",
        designPressureHead=20.0,
        uri="http://sandbox.dexpi.example/plant/P4712",
        x=120.0,
        y=240.0,
    )
    node(
        "H1007",
        ["PlateHeatExchanger", "HeatExchanger", "Equipment"],
        tagName="H1007",
        designTemperature=90.0,
        temperatureUnit="C",
        coolingMedium="cooling water",
        uri="http://sandbox.dexpi.example/plant/H1007",
        x=640.0,
        y=260.0,
    )

    # Equipment composition: chambers and nozzles
    node("T4750_CH1", ["Chamber"], chamberMaterial="1.4571", designPressure=10.0)
    node("T4750_CH2", ["Chamber"], chamberMaterial="1.4301", designPressure=6.0)
    node("T4750_N1", ["Nozzle"], subTagName="N1", nominalDiameter=80)
    node("T4750_N2", ["Nozzle"], subTagName="N2", nominalDiameter=100)
    node("P4712_N1", ["Nozzle"], subTagName="N1", nominalDiameter=80)
    node("H1007_N1", ["Nozzle"], subTagName="N1", nominalDiameter=100)
    node("T4750_N1_CP", ["ConnectionPoints"], count=2)
    node("P4712_N1_CP", ["ConnectionPoints"], count=2)
    node("DB1", ["DrawingBorder"], sheetFormat="A1")

    # Valves
    node(
        "MNb",
        ["GlobeValve", "OperatedValve", "PipingComponent"],
        tagName="MNb",
        valveCode="MNb",
        nominalDiameter=80,
        diameterUnit="mm",
        operation="manual",
    )
    node(
        "MNc",
        ["GlobeValve", "OperatedValve", "PipingComponent"],
        tagName="MNc",
        valveCode="MNc",
        nominalDiameter=50,
        diameterUnit="mm",
        operation="manual",
    )
    node(
        "BVa",
        ["ButterflyValve", "OperatedValve", "PipingComponent"],
        tagName="BVa",
        nominalDiameter=100,
        diameterUnit="mm",
        operation="manual",
    )
    node(
        "PSV4750",
        ["SpringLoadedGlobeSafetyValve", "SafetyValve", "PipingComponent"],
        tagName="PSV4750",
        setPressure=6.0,
        pressureUnit="bar",
    )
    node(
        "GV1007",
        ["GlobeValve", "OperatedValve", "PipingComponent"],
        tagName="GV1007",
        nominalDiameter=65,
        diameterUnit="mm",
        operation="actuated",
        failAction="fail close",
    )

    # Instrumentation
    node(
        "TIC1007",
        ["TemperatureIndicatingController", "ProcessInstrumentationFunction"],
        tagName="TIC1007",
        controlledVariable="temperature",
    )
    node(
        "TT4750_03",
        ["ProcessSignalGeneratingFunction"],
        tagName="TT4750.03",
        signalType="temperature",
    )
    node("ACT1007", ["Actuator"], actuatorType="pneumatic")

    # Off-page connectors
    node("OPC_SUPPLY", ["OffPageConnector"], connectorName="Feed A")
    node("OPC_FEED", ["OffPageConnector"], connectorName="Feed B")
    node("OPC_N2", ["OffPageConnector"], connectorName="N2 blanket")
    node("OPC_CWR", ["OffPageConnector"], connectorName="CWR", service="cooling water return")

    # Piping hierarchy
    node("PNS1", ["PipingNetworkSystem"], systemName="feed system", uri="http://sandbox.dexpi.example/pns/1")
    node("PNS2", ["PipingNetworkSystem"], systemName="cooling system", uri="http://sandbox.dexpi.example/pns/2")
    node("SEG1", ["PipingNetworkSegment"], segmentNumber=1)
    node("SEG2", ["PipingNetworkSegment"], segmentNumber=2)
    node("SEG3", ["PipingNetworkSegment"], segmentNumber=3)
    node("SEG4", ["PipingNetworkSegment"], segmentNumber=4)
    node("SEG5", ["PipingNetworkSegment"], segmentNumber=5)
    for pipe_id, dn, length in (
        ("PIPE1", 80, 2.5),
        ("PIPE2", 80, 1.2),
        ("PIPE3", 50, 3.0),
        ("PIPE4", 50, 1.8),
        ("PIPE5", 100, 2.0),
        ("PIPE6", 100, 1.5),
        ("PIPE7", 65, 4.5),
        ("PIPE8", 25, 0.8),
    ):
        node(pipe_id, ["Pipe", "PipingComponent"], nominalDiameter=dn, length=length)

    # Containment
    edge("PNS1", "SEG1", "has")
    edge("PNS1", "SEG2", "has")
    edge("PNS1", "SEG4", "has")
    edge("PNS1", "SEG5", "has")
    edge("PNS2", "SEG3", "has")
    edge("SEG1", "PIPE1", "has")
    edge("SEG1", "MNb", "has")
    edge("SEG1", "PIPE2", "has")
    edge("SEG2", "PIPE3", "has")
    edge("SEG2", "MNc", "has")
    edge("SEG2", "PIPE4", "has")
    edge("SEG4", "PIPE5", "has")
    edge("SEG4", "BVa", "has")
    edge("SEG4", "PIPE6", "has")
    edge("SEG5", "PIPE8", "has")
    edge("SEG5", "PSV4750", "has")
    edge("SEG3", "PIPE7", "has")
    edge("SEG3", "GV1007", "has")
    edge("T4750", "T4750_CH1", "has")
    edge("T4750", "T4750_CH2", "has")
    edge("T4750", "T4750_N1", "has")
    edge("T4750", "T4750_N2", "has")
    edge("P4712", "P4712_N1", "has")
    edge("H1007", "H1007_N1", "has")
    edge("T4750_N1", "T4750_N1_CP", "has")
    edge("P4712_N1", "P4712_N1_CP", "has")
    edge("GV1007", "ACT1007", "has")

    # Flow
    edge("OPC_SUPPLY", "P4712", "send_to")
    edge("P4712", "PIPE1", "send_to")
    edge("PIPE1", "MNb", "send_to")
    edge("MNb", "PIPE2", "send_to", nominalDiameter=80)
    edge("PIPE2", "T4750", "send_to")
    edge("OPC_FEED", "PIPE3", "send_to")
    edge("PIPE3", "MNc", "send_to")
    edge("MNc", "PIPE4", "send_to")
    edge("PIPE4", "T4750", "send_to")
    edge("OPC_N2", "PIPE8", "send_to")
    edge("PIPE8", "PSV4750", "send_to")
    edge("PSV4750", "T4750", "send_to")
    edge("T4750", "PIPE5", "send_to")
    edge("PIPE5", "BVa", "send_to")
    edge("BVa", "PIPE6", "send_to")
    edge("PIPE6", "H1007", "send_to")
    edge("H1007", "PIPE7", "send_to")
    edge("PIPE7", "GV1007", "send_to")
    edge("GV1007", "OPC_CWR", "send_to")

    # Signals and control
    edge("T4750", "TT4750_03", "send_to", signal=True)
    edge("H1007", "TIC1007", "send_to", signal=True)
    edge("TIC1007", "ACT1007", "control")
    edge("ACT1007", "GV1007", "manipulate")

    g.check_integrity()
    return g


# -- offline demo brain -------------------------------------------------------


def _first_line(text: str, prefix: str) -> str:
    for line in text.splitlines():
        if line.startswith(prefix):
            return line[len(prefix) :].strip()
    return ""


def _demo_reply(request: ChatRequest) -> ScriptedReply:
    last = request.messages[-1].content

    if request.tools:
        tool_names = {t.name for t in request.tools}
        # Answer once a tool result is in context; otherwise pick one tool.
        if any(m.role == "tool" for m in request.messages):
            tool_output = [m.content for m in request.messages if m.role == "tool"][-1]
            snippet = " ".join(tool_output.split())[:600]
            return ScriptedReply(content=f"Based on the retrieved context: {snippet}")
        question = last.lower()
        if "trace" in question or "path" in question or "isolate" in question:
            preferred = ("path_rag", {"query": last})
        elif question.startswith(("list", "describe", "summar")) or "overall" in question:
            preferred = ("context_rag", {"mode": "graph"})
        elif re.search(r"\b(how many|count)\b", question):
            preferred = ("cypher_rag", {"query": last})
        else:
            preferred = ("vector_rag", {"query": last})
        name, args = preferred
        if name not in tool_names:
            name = sorted(tool_names)[0]
            args = {"query": last} if name != "context_rag" else {"mode": "graph"}
        return ScriptedReply(tool_calls=[ToolCall("call_1", name, args)])

    if "(global context)" in last:
        labels = _first_line(last, "Labels:")
        props = _first_line(last, "Properties:")
        return ScriptedReply(
            content=f"Component with labels {labels} and properties {props}; part of the demo flowsheet."
        )
    if "Incoming Connections:" in last:
        labels = _first_line(last, "Labels:")
        return ScriptedReply(
            content=f"Locally, the {labels} component links its upstream and downstream neighbors."
        )
    if '"has_answer"' in last:
        # Consider two visited nodes enough context to answer.
        enough = last.count("== Node") >= 2
        return ScriptedReply(
            content=json.dumps({"has_answer": enough, "answer": "derived from the explored path" if enough else ""})
        )
    if "search query text only" in last:
        return ScriptedReply(content="the next connected component on the relevant line")
    if "Explored paths:" in last:
        path_line = _first_line(last, "Path 1:")
        return ScriptedReply(content=f"Following {path_line or 'the explored path'}, the context answers the question.")
    if "into Cypher" in last:
        return ScriptedReply(content="MATCH (n:Equipment) RETURN n.tagName LIMIT 5")
    if "using only the query results" in last:
        return ScriptedReply(content="The matched rows are listed above; they ground this answer.")
    if "strict evaluator" in last:
        scores = {
            criterion: {"score": 4, "justification": f"{criterion} judged against the reference."}
            for criterion in ("relatedness", "completeness", "correctness", "coherence")
        }
        return ScriptedReply(content=json.dumps(scores))
    return ScriptedReply(content=f"(demo) {last[:200]}")


def build_demo_provider() -> MockChatModel:
    """Scripted mock whose single rule answers every request deterministically."""
    mock = MockChatModel()
    mock.script(None, _demo_reply, times=None)
    return mock
