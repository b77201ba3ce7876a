"""The four graph-retrieval tools exposed to the agent.

context_rag serializes a filtered whole-graph rendering (graph or topology
mode). vector_rag runs exact top-k cosine search over a named semantic index.
path_rag locates starting nodes globally, then traces the graph hop by hop
with LLM guidance, bounded by max_depth/max_breadth. cypher_rag turns the
question plus graph schema into one query, executes it, and answers strictly
from the rows.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable

from .cypher import execute_query, parse_query, render_schema_context
from .cypher.executor import DEFAULT_HOP_CEILING
from .errors import ConfigurationError, PidGraphError, ToolError
from .graph import PropertyGraph
from .llm import LlmHandle, ToolDescriptor, estimate_tokens, extract_json_object, fill_template, load_prompt
from .rendering import ContextMode, render_context
from .vectors import IndexName, ScoredNode, VectorIndex

DEFAULT_TOP_K = 5
NO_ANSWER = "NoAnswerFound"


@dataclass
class ToolResult:
    tool: str
    content: str
    structured: object | None = None
    token_estimate: int = 0


@dataclass
class PathRagParams:
    max_depth: int = 3
    max_breadth: int = 2

    def __post_init__(self):
        if self.max_depth < 1 or self.max_breadth < 1:
            raise ConfigurationError("max_depth and max_breadth must be >= 1")


@dataclass
class PathTrace:
    node_ids: list[str]
    accumulated_context: str
    answer: str | None
    terminated_by: str  # answer_found | max_depth | dead_end | no_next_hop


@dataclass
class Toolkit:
    """Everything a tool invocation needs, bound to one graph snapshot."""

    graph: PropertyGraph
    indexes: dict[IndexName, VectorIndex]
    llm: LlmHandle
    params: PathRagParams = field(default_factory=PathRagParams)
    hop_ceiling: int = DEFAULT_HOP_CEILING
    default_top_k: int = DEFAULT_TOP_K
    tokenizer: Callable[[str], int] = estimate_tokens


def context_rag(graph: PropertyGraph, mode: ContextMode, tokenizer=estimate_tokens) -> ToolResult:
    content = render_context(graph, mode)
    return ToolResult("context_rag", content, None, tokenizer(content))


def vector_rag(
    toolkit: Toolkit,
    query: str,
    index_name: IndexName = IndexName.GLOBAL,
    top_k: int | None = None,
    tag: str | None = None,
) -> ToolResult:
    index = toolkit.indexes.get(index_name)
    if index is None or len(index) == 0:
        raise ConfigurationError(f"vector index {index_name.value} is not built")
    k = top_k if top_k is not None else toolkit.default_top_k
    (query_vector,) = toolkit.llm.gateway.embed([query], tag=tag)
    scored = []
    for node_id, score in index.top_k(query_vector, k):
        node = toolkit.graph.nodes[node_id]
        content = (
            node.global_semantic if index_name is IndexName.GLOBAL else node.local_semantic
        ) or toolkit.graph.get_node_context(node_id)
        scored.append(ScoredNode(node_id, score, list(node.labels), content))
    lines = []
    for item in scored:
        lines.append(f"score={item.score:.6f} elementId={item.node_id} nodeLabels={':'.join(item.node_labels)}")
        lines.append(f"  {item.content}")
    content = "\n".join(lines)
    return ToolResult("vector_rag", content, scored, toolkit.tokenizer(content))


def _build_context(graph: PropertyGraph, node_ids: list[str]) -> str:
    parts = []
    for node_id in node_ids:
        parts.append(f"== Node {node_id}\n{graph.get_node_context(node_id)}")
    return "\n\n".join(parts)


def _evaluate_context(llm: LlmHandle, query: str, context: str, tag: str | None) -> tuple[bool, str]:
    prompt = fill_template(
        load_prompt("path_evaluate_context"),
        {"query": query, "accumulated_context": context},
    )
    reply = llm.complete(prompt, tag=tag)
    parsed = extract_json_object(reply)
    if parsed is None:
        # Conservative: an unparseable verdict never ends the exploration.
        return False, ""
    return bool(parsed.get("has_answer")), str(parsed.get("answer") or "")


def path_rag(
    toolkit: Toolkit,
    query: str,
    params: PathRagParams | None = None,
    tag: str | None = None,
) -> ToolResult:
    params = params or toolkit.params
    graph = toolkit.graph
    llm = toolkit.llm
    global_index = toolkit.indexes.get(IndexName.GLOBAL)
    local_index = toolkit.indexes.get(IndexName.LOCAL)
    if global_index is None or local_index is None or len(global_index) == 0:
        raise ConfigurationError("path_rag requires both semantic indexes to be built")

    (query_vector,) = llm.gateway.embed([query], tag=tag)
    starting = global_index.top_k(query_vector, params.max_breadth)
    if not starting:
        return ToolResult("path_rag", NO_ANSWER, [], toolkit.tokenizer(NO_ANSWER))

    traces: list[PathTrace] = []
    for start_id, _score in starting:
        path = [start_id]
        visited = {start_id}
        context = _build_context(graph, path)
        has_answer, answer = _evaluate_context(llm, query, context, tag)
        if has_answer:
            traces.append(PathTrace(path, context, answer, "answer_found"))
            continue

        current = start_id
        terminated_by = "max_depth"
        trace_answer: str | None = None
        for _hop in range(params.max_depth):
            neighbors = graph.get_neighbors(current, exclude=visited)
            if not neighbors:
                terminated_by = "dead_end"
                break
            hop_query = llm.complete(
                fill_template(
                    load_prompt("path_next_hop"),
                    {"query": query, "accumulated_context": context},
                ),
                tag=tag,
            ).strip()
            candidates = [
                (n.id, n.local_embedding)
                for n, _e, _d in neighbors
                if n.local_embedding is not None
            ]
            if not hop_query or not candidates:
                terminated_by = "no_next_hop"
                break
            (hop_vector,) = llm.gateway.embed([hop_query], tag=tag)
            local_candidates = VectorIndex(IndexName.LOCAL, candidates)
            next_id = local_candidates.top_k(hop_vector, 1)[0][0]

            path.append(next_id)
            visited.add(next_id)
            context = _build_context(graph, path)
            has_answer, answer = _evaluate_context(llm, query, context, tag)
            if has_answer:
                terminated_by = "answer_found"
                trace_answer = answer
                break
            current = next_id
        traces.append(PathTrace(path, context, trace_answer, terminated_by))

    rendered_paths = []
    for i, trace in enumerate(traces, start=1):
        rendered_paths.append(
            f"Path {i}: {' -> '.join(trace.node_ids)} (terminated by {trace.terminated_by})\n"
            f"Answer so far: {trace.answer or 'none'}\n{trace.accumulated_context}"
        )
    final = llm.complete(
        fill_template(
            load_prompt("path_select_answer"),
            {"query": query, "paths": "\n\n".join(rendered_paths)},
        ),
        tag=tag,
    )
    content = final.strip() or NO_ANSWER
    return ToolResult("path_rag", content, traces, toolkit.tokenizer(content))


def cypher_rag(
    toolkit: Toolkit,
    query: str,
    tag: str | None = None,
) -> ToolResult:
    graph = toolkit.graph
    llm = toolkit.llm
    schema_text = render_schema_context(graph.schema())
    # Single generation attempt, no iterative refinement.
    cypher_text = llm.complete(
        fill_template(load_prompt("cypher_generate"), {"schema": schema_text, "query": query}),
        tag=tag,
    ).strip()
    cypher_text = _strip_fences(cypher_text)
    try:
        ast = parse_query(cypher_text)
        table = execute_query(ast, graph, hop_ceiling=toolkit.hop_ceiling)
    except PidGraphError as exc:
        raise ToolError(f"generated query rejected: {exc}") from exc
    results_text = table.render()
    answer = llm.complete(
        fill_template(
            load_prompt("cypher_answer"),
            {"query": query, "cypher": cypher_text, "results": results_text},
        ),
        tag=tag,
    )
    empty = len(table.rows) == 0
    content = f"{answer.strip()}\n\nExecuted Cypher: {cypher_text}"
    if empty:
        content += "\n(no rows matched; answer is ungrounded beyond that fact)"
    structured = {
        "cypher": cypher_text,
        "columns": table.columns,
        "row_count": len(table.rows),
        "results": results_text,
        "warnings": table.warnings,
        "empty_grounding": empty,
    }
    return ToolResult("cypher_rag", content, structured, toolkit.tokenizer(content))


def _strip_fences(text: str) -> str:
    if text.startswith("```"):
        lines = text.splitlines()
        lines = lines[1:]
        if lines and lines[-1].strip().startswith("```"):
            lines = lines[:-1]
        return "\n".join(lines).strip()
    return text


# -- agent-facing descriptors -------------------------------------------------


def tool_descriptors() -> list[ToolDescriptor]:
    return [
        ToolDescriptor(
            name="context_rag",
            description=(
                "Return a filtered rendering of the whole flowsheet graph. "
                "mode='graph' keeps labels, tags, and design-specification "
                "properties; mode='topology' keeps only labels and connectivity."
            ),
            parameters={
                "type": "object",
                "properties": {
                    "mode": {"type": "string", "enum": ["graph", "topology"], "default": "graph"}
                },
            },
        ),
        ToolDescriptor(
            name="vector_rag",
            description=(
                "Semantic node retrieval: embed the query and return the top-k "
                "most similar nodes with their descriptions."
            ),
            parameters={
                "type": "object",
                "properties": {
                    "query": {"type": "string"},
                    "index": {
                        "type": "string",
                        "enum": [IndexName.GLOBAL.value, IndexName.LOCAL.value],
                        "default": IndexName.GLOBAL.value,
                    },
                    "top_k": {"type": "integer", "minimum": 1, "default": DEFAULT_TOP_K},
                },
                "required": ["query"],
            },
        ),
        ToolDescriptor(
            name="path_rag",
            description=(
                "Locate-and-trace retrieval: find starting nodes by global "
                "semantic search, then explore connected paths hop by hop to "
                "gather context for the question."
            ),
            parameters={
                "type": "object",
                "properties": {
                    "query": {"type": "string"},
                    "max_depth": {"type": "integer", "minimum": 1, "default": 3},
                    "max_breadth": {"type": "integer", "minimum": 1, "default": 2},
                },
                "required": ["query"],
            },
        ),
        ToolDescriptor(
            name="cypher_rag",
            description=(
                "Translate the question into one Cypher query against the graph "
                "schema, execute it, and answer from the returned rows."
            ),
            parameters={
                "type": "object",
                "properties": {"query": {"type": "string"}},
                "required": ["query"],
            },
        ),
    ]


def run_tool(toolkit: Toolkit, name: str, arguments: dict, tag: str | None = None) -> ToolResult:
    """Dispatch an agent tool call onto the matching tool function."""
    if name == "context_rag":
        mode = ContextMode(arguments.get("mode", "graph"))
        return context_rag(toolkit.graph, mode, toolkit.tokenizer)
    if name == "vector_rag":
        if "query" not in arguments:
            raise ToolError("vector_rag requires a 'query' argument")
        index = IndexName(arguments.get("index", IndexName.GLOBAL.value))
        top_k = arguments.get("top_k")
        return vector_rag(toolkit, arguments["query"], index, top_k, tag=tag)
    if name == "path_rag":
        if "query" not in arguments:
            raise ToolError("path_rag requires a 'query' argument")
        params = PathRagParams(
            max_depth=int(arguments.get("max_depth", toolkit.params.max_depth)),
            max_breadth=int(arguments.get("max_breadth", toolkit.params.max_breadth)),
        )
        return path_rag(toolkit, arguments["query"], params, tag=tag)
    if name == "cypher_rag":
        if "query" not in arguments:
            raise ToolError("cypher_rag requires a 'query' argument")
        return cypher_rag(toolkit, arguments["query"], tag=tag)
    raise ToolError(f"unknown tool {name!r}")


def summarize_result(result: ToolResult) -> str:
    """One-line summary for tool_finished events and logs."""
    if result.tool == "path_rag" and isinstance(result.structured, list):
        paths = ", ".join("->".join(t.node_ids) for t in result.structured) or "none"
        return f"{len(result.structured)} path(s): {paths}"
    if result.tool == "vector_rag" and isinstance(result.structured, list):
        ids = ", ".join(s.node_id for s in result.structured)
        return f"{len(result.structured)} node(s): {ids}"
    if result.tool == "cypher_rag" and isinstance(result.structured, dict):
        return f"{result.structured['row_count']} row(s) from: {result.structured['cypher']}"
    first_line = result.content.splitlines()[0] if result.content else ""
    return first_line[:160]


def tool_call_arguments_json(arguments: dict) -> str:
    return json.dumps(arguments, ensure_ascii=False, sort_keys=True)
