"""pidgraph command line: ingest, enrich, query, chat, bench, serve.

Chat is a thin client of the HTTP service: with --server it talks to a running
instance, otherwise it mounts the service in-process and consumes the same SSE
event stream, so terminal chat and the web UI share one agent code path.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click
import httpx
import yaml

from . import __version__
from .abstraction import condense, load_rule_sets
from .agent import AgentLimits
from .config import AppConfig
from .cypher import execute_query, parse_query
from .demo import build_demo_flowsheet, build_demo_provider
from .enrichment import enrich_graph
from .errors import PidGraphError
from .evalharness import (
    BenchmarkConfig,
    BenchmarkRuntime,
    aggregate,
    load_qa_set,
    render_report,
    run_benchmark,
    write_records,
)
from .graph import AbstractionLevel, PropertyGraph
from .graphml import load_graph, save_graph
from .llm import Gateway, LlmHandle, MockEmbedder
from .providers import _sse_events
from .service import GraphBundle, ServiceState, create_app, default_frontend_dir
from .vectors import build_indexes

LEVELS = [level.value for level in AbstractionLevel]


def _fail(message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(1)


def _load_graph_arg(graph_arg: str) -> PropertyGraph:
    if graph_arg == "demo":
        return build_demo_flowsheet()
    path = Path(graph_arg)
    if not path.exists():
        raise PidGraphError(f"graph file not found: {path}")
    return load_graph(path)


def _prepare_levels(
    graph: PropertyGraph, rules_path: str | Path | None
) -> dict[AbstractionLevel, PropertyGraph]:
    rules = load_rule_sets(rules_path)
    levels = {graph.abstraction_level: graph}
    for level in AbstractionLevel:
        if level.rank > graph.abstraction_level.rank:
            levels[level] = condense(graph, level, rules)
    return levels


def _ensure_enriched(levels: dict[AbstractionLevel, PropertyGraph], config: AppConfig) -> None:
    """Vector tools need embeddings; mock mode enriches on the fly."""
    needs = [
        g
        for g in levels.values()
        if any(n.global_embedding is None or n.local_embedding is None for n in g.nodes.values())
    ]
    if not needs:
        return
    if config.provider != "mock":
        raise PidGraphError(
            "graph is missing semantic embeddings; run `pidgraph enrich` first "
            "(automatic enrichment is only done in mock mode)"
        )
    for g in needs:
        llm = config.build_llm()
        enrich_graph(g, llm).raise_if_failed()


@click.group()
@click.version_option(version=__version__, prog_name="pidgraph")
def main():
    """GraphRAG engine and chat service for smart P&ID flowsheet graphs."""


@main.command()
@click.option("--level", type=click.Choice(LEVELS[1:]), required=True, help="Target abstraction level.")
@click.option("--rules", "rules_path", type=click.Path(exists=True), default=None, help="Condensation rule set YAML.")
@click.argument("input_graphml")
@click.argument("output_graphml", type=click.Path())
def ingest(level, rules_path, input_graphml, output_graphml):
    """Condense INPUT_GRAPHML to a coarser level and write OUTPUT_GRAPHML."""
    try:
        graph = _load_graph_arg(input_graphml)
        condensed = condense(graph, AbstractionLevel(level), load_rule_sets(rules_path))
        save_graph(condensed, output_graphml)
    except PidGraphError as exc:
        _fail(str(exc))
    click.echo(
        f"wrote {output_graphml}: {len(condensed.nodes)} nodes, {len(condensed.edges)} edges "
        f"({level} level)"
    )


@main.command()
@click.option("--out", "output_graphml", type=click.Path(), required=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--mock", is_flag=True, help="Use the offline scripted provider.")
@click.option("--skip-existing", is_flag=True, help="Leave already-enriched nodes untouched.")
@click.option("--sidecar", is_flag=True, help="Write embeddings to a binary <out>.emb sidecar.")
@click.argument("input_graphml")
def enrich(output_graphml, config_path, mock, skip_existing, sidecar, input_graphml):
    """Generate semantic descriptions and embeddings for every node."""
    try:
        config = AppConfig.load(config_path)
        if mock:
            config.provider = "mock"
            config.embedder = "mock"
        graph = _load_graph_arg(input_graphml)
        llm = config.build_llm()
        report = enrich_graph(graph, llm, skip_existing=skip_existing)
        save_graph(graph, output_graphml, include_embeddings=not sidecar, sidecar=sidecar)
    except PidGraphError as exc:
        _fail(str(exc))
    click.echo(
        f"enriched {len(report.enriched)} node(s), skipped {len(report.skipped)}, "
        f"failed {len(report.errors)} -> {output_graphml}"
    )
    for node_id, message in report.errors:
        click.echo(f"  failed {node_id}: {message}", err=True)
    if report.errors:
        sys.exit(1)


@main.command()
@click.option("--hop-ceiling", type=int, default=8, show_default=True)
@click.argument("input_graphml")
@click.argument("query_text")
def query(hop_ceiling, input_graphml, query_text):
    """Run a Cypher-subset query against a graph and print the result table."""
    try:
        graph = _load_graph_arg(input_graphml)
        table = execute_query(parse_query(query_text), graph, hop_ceiling=hop_ceiling)
    except PidGraphError as exc:
        _fail(str(exc))
    click.echo(table.render())


def _build_service_state(graph_arg: str, config: AppConfig, graph_id: str | None = None) -> ServiceState:
    graph = _load_graph_arg(graph_arg)
    levels = _prepare_levels(graph, config.rules_file)
    _ensure_enriched(levels, config)
    bundle = GraphBundle(graph_id or (Path(graph_arg).stem if graph_arg != "demo" else "demo"), levels)
    gateway = config.build_gateway()
    return ServiceState(
        {bundle.graph_id: bundle},
        gateway,
        config.model,
        params=config.path_rag_params(),
        limits=AgentLimits(
            max_tool_calls_per_turn=config.max_tool_calls_per_turn,
            memory_token_budget=config.memory_token_budget,
        ),
        hop_ceiling=config.hop_ceiling,
    )


def _render_event(event: dict) -> None:
    kind = event.get("type")
    if kind == "token":
        click.echo(event["text"], nl=False)
    elif kind == "tool_started":
        click.echo(f"\n[tool] {event['name']}({json.dumps(event.get('args', {}))}) ...")
    elif kind == "tool_finished":
        click.echo(f"[tool] {event['name']} finished in {event['duration']:.2f}s: {event['result_summary']}")
    elif kind == "turn_complete":
        usage = event.get("usage", {})
        click.echo(
            f"\n[turn] tokens in/out: {usage.get('input_tokens', 0)}/{usage.get('output_tokens', 0)}"
            f", cost ${event.get('cost', 0.0):.4f}"
            + (" (tool-call limit reached)" if event.get("limit_reached") else "")
        )
    elif kind == "error":
        click.echo(f"\n[error] {event.get('detail')}", err=True)


def _chat_once(client: httpx.Client, base: str, session_id: str, text: str) -> None:
    with client.stream(
        "POST", f"{base}/sessions/{session_id}/messages", json={"text": text}, timeout=300.0
    ) as response:
        if response.status_code >= 400:
            response.read()
            raise PidGraphError(f"server returned HTTP {response.status_code}: {response.text}")
        for _event, data in _sse_events(response.iter_lines()):
            _render_event(json.loads(data))


@main.command()
@click.option("--graph", "graph_arg", default="demo", show_default=True, help="Graph file or 'demo'.")
@click.option("--level", type=click.Choice(LEVELS), default=AbstractionLevel.CONCEPTUAL.value, show_default=True)
@click.option("--server", "server_url", default=None, help="URL of a running pidgraph service.")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--mock", is_flag=True, help="Use the offline scripted provider.")
@click.option("--message", "one_shot", default=None, help="Send one message, print the turn, exit.")
def chat(graph_arg, level, server_url, config_path, mock, one_shot):
    """Terminal chat client over the service's SSE event stream."""
    try:
        if server_url is None:
            from fastapi.testclient import TestClient

            config = AppConfig.load(config_path)
            if mock:
                config.provider = "mock"
                config.embedder = "mock"
            state = _build_service_state(graph_arg, config)
            # In-process ASGI mount; same wire protocol as a remote server.
            client = TestClient(create_app(state))
            base = ""
            graph_id = next(iter(state.bundles))
        else:
            client = httpx.Client(base_url=server_url)
            base = ""
            graphs = client.get("/graphs").json()
            if not graphs:
                raise PidGraphError("server hosts no graphs")
            graph_id = graphs[0]["graph_id"]
        created = client.post("/sessions", json={"graph_id": graph_id, "level": level})
        if created.status_code >= 400:
            raise PidGraphError(f"could not create session: HTTP {created.status_code}")
        session_id = created.json()["session_id"]
    except PidGraphError as exc:
        _fail(str(exc))

    click.echo(f"session {session_id} on graph {graph_id!r} at {level} level")
    if one_shot is not None:
        try:
            _chat_once(client, base, session_id, one_shot)
        except PidGraphError as exc:
            _fail(str(exc))
        return
    click.echo("type a question, or /quit to exit")
    while True:
        try:
            line = input("> ").strip()
        except (EOFError, KeyboardInterrupt):
            break
        if not line:
            continue
        if line in ("/quit", "/exit"):
            break
        try:
            _chat_once(client, base, session_id, line)
        except PidGraphError as exc:
            click.echo(f"error: {exc}", err=True)


@main.command()
@click.option("--config", "bench_config_path", type=click.Path(exists=True), required=True)
@click.option("--out", "out_dir", type=click.Path(), required=True)
def bench(bench_config_path, out_dir):
    """Run the QA benchmark described by a config file; write records + report."""
    try:
        records, report = _run_bench(Path(bench_config_path), Path(out_dir))
    except PidGraphError as exc:
        _fail(str(exc))
    failed = sum(1 for r in records if r.failed)
    click.echo(report)
    click.echo(f"\n{len(records)} record(s), {failed} failed -> {out_dir}")


def _run_bench(bench_config_path: Path, out_dir: Path):
    raw = yaml.safe_load(bench_config_path.read_text(encoding="utf-8")) or {}
    app_config = AppConfig.load(raw.get("app_config"))
    if raw.get("provider"):
        app_config.provider = raw["provider"]
    if raw.get("embedder"):
        app_config.embedder = raw["embedder"]

    models = raw.get("models") or [app_config.model]
    tools = raw.get("tools") or ["context_rag", "vector_rag", "path_rag", "cypher_rag"]
    levels = [AbstractionLevel(value) for value in (raw.get("levels") or ["conceptual"])]
    repetitions = int(raw.get("repetitions", 2))
    qa_path = raw.get("qa_set")
    qa_items = load_qa_set(None if qa_path in (None, "builtin") else qa_path)

    graph = _load_graph_arg(raw.get("graph", "demo"))
    level_graphs = _prepare_levels(graph, app_config.rules_file)
    _ensure_enriched(level_graphs, app_config)
    graphs = {level: level_graphs[level] for level in levels}
    indexes = {level: build_indexes(graphs[level]) for level in levels}

    cost_model = app_config.cost_model()
    if app_config.provider == "mock":

        def llm_factory(config, qa, rep):
            gateway = Gateway(
                build_demo_provider(),
                MockEmbedder(dim=app_config.embedding_dim),
                cost_model=cost_model,
                embed_model_name=app_config.embed_model,
            )
            return LlmHandle(gateway, config.model)

        def judge_factory(config, qa, rep):
            return LlmHandle(
                Gateway(
                    build_demo_provider(),
                    MockEmbedder(dim=app_config.embedding_dim),
                    cost_model=cost_model,
                    embed_model_name=app_config.embed_model,
                ),
                raw.get("judge_model", app_config.judge_model),
            )

        scoring_gateway = Gateway(
            build_demo_provider(),
            MockEmbedder(dim=app_config.embedding_dim),
            cost_model=cost_model,
            embed_model_name=app_config.embed_model,
        )
    else:
        shared = app_config.build_gateway()

        def llm_factory(config, qa, rep):
            return LlmHandle(shared, config.model)

        def judge_factory(config, qa, rep):
            return LlmHandle(shared, raw.get("judge_model", app_config.judge_model))

        scoring_gateway = shared

    runtime = BenchmarkRuntime(
        graphs=graphs,
        indexes=indexes,
        llm_factory=llm_factory,
        judge_factory=judge_factory,
        scoring_gateway=scoring_gateway,
        params=app_config.path_rag_params(),
    )
    configs = [
        BenchmarkConfig(model, tool, level)
        for model in models
        for tool in tools
        for level in levels
    ]
    records = run_benchmark(configs, qa_items, repetitions, runtime)

    out_dir.mkdir(parents=True, exist_ok=True)
    write_records(records, out_dir / "records.jsonl")
    report = render_report(aggregate(records))
    (out_dir / "report.md").write_text(report + "\n", encoding="utf-8")
    return records, report


@main.command()
@click.option("--graph", "graph_arg", default="demo", show_default=True, help="Graph file or 'demo'.")
@click.option("--port", type=int, default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--mock", is_flag=True, help="Use the offline scripted provider.")
@click.option("--state-dir", type=click.Path(), default=None, help="Session log directory.")
def serve(graph_arg, port, host, config_path, mock, state_dir):
    """Run the chat service (and the web UI when frontend/dist exists)."""
    try:
        config = AppConfig.load(config_path)
        if mock:
            config.provider = "mock"
            config.embedder = "mock"
        state = _build_service_state(graph_arg, config)
        if state_dir:
            state.log_dir = Path(state_dir)
            state.log_dir.mkdir(parents=True, exist_ok=True)
        app = create_app(state, frontend_dir=default_frontend_dir())
    except PidGraphError as exc:
        _fail(str(exc))
    import uvicorn

    uvicorn.run(app, host=host, port=port, log_level="info")


if __name__ == "__main__":
    main()
