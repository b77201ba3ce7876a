"""HTTP service exposing chat sessions, streamed agent events, and graph views.

One service instance hosts one or more graph artifacts, each available at its
abstraction levels. A session binds to an immutable (graph, level) snapshot at
creation. Posting a message streams the turn as server-sent events whose data
frames are JSON objects with a `type` field matching the agent event variants;
only one turn may be in flight per session. A turn keeps running server-side
if the client disconnects, and history remains retrievable afterwards.
"""

from __future__ import annotations

import json
import queue
import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import RedirectResponse, StreamingResponse
from pydantic import BaseModel, Field

from .agent import (
    AgentLimits,
    AgentSession,
    ErrorEvent,
    TurnCompleteEvent,
    event_to_dict,
    message_to_dict,
    new_session,
    run_turn,
)
from .graph import AbstractionLevel, PropertyGraph
from .llm import Gateway, LlmHandle, Message, ToolCall
from .tools import PathRagParams, Toolkit
from .vectors import build_indexes


@dataclass
class GraphBundle:
    """One graph artifact with its per-level snapshots and indexes."""

    graph_id: str
    levels: dict[AbstractionLevel, PropertyGraph]
    indexes: dict[AbstractionLevel, dict] = field(default_factory=dict)

    def toolkit_for(self, level: AbstractionLevel, llm: LlmHandle, params: PathRagParams, hop_ceiling: int) -> Toolkit:
        if level not in self.levels:
            raise KeyError(level)
        if level not in self.indexes:
            self.indexes[level] = build_indexes(self.levels[level])
        return Toolkit(
            graph=self.levels[level],
            indexes=self.indexes[level],
            llm=llm,
            params=params,
            hop_ceiling=hop_ceiling,
        )


@dataclass
class SessionRuntime:
    session: AgentSession
    graph_id: str
    level: AbstractionLevel
    created_at: float
    busy: bool = False


class ServiceState:
    def __init__(
        self,
        bundles: dict[str, GraphBundle],
        gateway: Gateway,
        model: str,
        params: PathRagParams | None = None,
        limits: AgentLimits | None = None,
        hop_ceiling: int = 8,
        log_dir: Path | str | None = None,
    ):
        self.bundles = bundles
        self.gateway = gateway
        self.model = model
        self.params = params or PathRagParams()
        self.limits = limits or AgentLimits()
        self.hop_ceiling = hop_ceiling
        self.sessions: dict[str, SessionRuntime] = {}
        self.log_dir = Path(log_dir) if log_dir else None
        self._lock = threading.Lock()
        if self.log_dir:
            self.log_dir.mkdir(parents=True, exist_ok=True)
            self._recover_sessions()

    # -- session log persistence (append-only, message granularity) --------

    def _session_log(self, session_id: str) -> Path | None:
        if self.log_dir is None:
            return None
        return self.log_dir / f"{session_id}.jsonl"

    def append_log(self, session_id: str, entry: dict) -> None:
        path = self._session_log(session_id)
        if path is None:
            return
        with path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry, ensure_ascii=False) + "\n")

    def _recover_sessions(self) -> None:
        for path in sorted(self.log_dir.glob("*.jsonl")):
            session_id = path.stem
            meta = None
            messages: list[Message] = []
            for line in path.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                entry = json.loads(line)
                if entry.get("kind") == "created":
                    meta = entry
                elif entry.get("kind") == "message":
                    messages.append(_message_from_dict(entry["message"]))
            if meta is None:
                continue
            graph_id = meta["graph_id"]
            level = AbstractionLevel(meta["level"])
            if graph_id not in self.bundles or level not in self.bundles[graph_id].levels:
                continue
            runtime = self._make_runtime(graph_id, level, session_id)
            if messages:
                runtime.session.history = messages
            runtime.created_at = meta.get("created_at", time.time())
            self.sessions[session_id] = runtime

    def _make_runtime(self, graph_id: str, level: AbstractionLevel, session_id: str | None = None) -> SessionRuntime:
        bundle = self.bundles[graph_id]
        llm = LlmHandle(self.gateway, self.model)
        toolkit = bundle.toolkit_for(level, llm, self.params, self.hop_ceiling)
        session = new_session(toolkit, limits=self.limits, session_id=session_id)
        return SessionRuntime(session, graph_id, level, created_at=time.time())

    def create_session(self, graph_id: str, level: AbstractionLevel) -> SessionRuntime:
        with self._lock:
            if graph_id not in self.bundles:
                raise KeyError(graph_id)
            if level not in self.bundles[graph_id].levels:
                raise KeyError(level)
            runtime = self._make_runtime(graph_id, level)
            self.sessions[runtime.session.session_id] = runtime
        self.append_log(
            runtime.session.session_id,
            {
                "kind": "created",
                "graph_id": graph_id,
                "level": level.value,
                "created_at": runtime.created_at,
            },
        )
        return runtime


def _message_from_dict(raw: dict) -> Message:
    return Message(
        role=raw["role"],
        content=raw.get("content", ""),
        tool_calls=[ToolCall(c["id"], c["name"], c["arguments"]) for c in raw.get("tool_calls", [])],
        tool_call_id=raw.get("tool_call_id"),
    )


# -- wire models ---------------------------------------------------------------


class CreateSessionRequest(BaseModel):
    graph_id: str
    level: str = Field(default=AbstractionLevel.CONCEPTUAL.value)


class SessionResource(BaseModel):
    session_id: str
    graph_id: str
    level: str
    created_at: float
    message_count: int


class PostMessageRequest(BaseModel):
    text: str


class GraphViewResponse(BaseModel):
    graph_id: str
    level: str
    node_count: int
    edge_count: int
    label_histogram: dict[str, int]


class GraphInfo(BaseModel):
    graph_id: str
    levels: list[str]


def _session_resource(runtime: SessionRuntime) -> SessionResource:
    return SessionResource(
        session_id=runtime.session.session_id,
        graph_id=runtime.graph_id,
        level=runtime.level.value,
        created_at=runtime.created_at,
        message_count=len(runtime.session.history),
    )


def create_app(state: ServiceState, frontend_dir: Path | str | None = None) -> FastAPI:
    app = FastAPI(title="pidgraph chat service")
    app.state.service = state

    @app.get("/graphs", response_model=list[GraphInfo])
    def list_graphs():
        return [
            GraphInfo(graph_id=bundle.graph_id, levels=[lvl.value for lvl in bundle.levels])
            for bundle in state.bundles.values()
        ]

    @app.get("/graphs/{graph_id}/view", response_model=GraphViewResponse)
    def get_graph_view(graph_id: str, level: str = AbstractionLevel.CONCEPTUAL.value):
        bundle = state.bundles.get(graph_id)
        if bundle is None:
            raise HTTPException(status_code=404, detail=f"unknown graph {graph_id!r}")
        try:
            level_enum = AbstractionLevel(level)
        except ValueError:
            raise HTTPException(status_code=404, detail=f"unknown level {level!r}") from None
        graph = bundle.levels.get(level_enum)
        if graph is None:
            raise HTTPException(status_code=404, detail=f"level {level!r} not available")
        histogram: dict[str, int] = {}
        for node in graph.nodes.values():
            histogram[node.primary_label] = histogram.get(node.primary_label, 0) + 1
        return GraphViewResponse(
            graph_id=graph_id,
            level=level_enum.value,
            node_count=len(graph.nodes),
            edge_count=len(graph.edges),
            label_histogram=dict(sorted(histogram.items())),
        )

    @app.post("/sessions", response_model=SessionResource, status_code=201)
    def create_session(request: CreateSessionRequest):
        try:
            level = AbstractionLevel(request.level)
        except ValueError:
            raise HTTPException(status_code=404, detail=f"unknown level {request.level!r}") from None
        try:
            runtime = state.create_session(request.graph_id, level)
        except KeyError as exc:
            raise HTTPException(status_code=404, detail=f"unknown graph or level: {exc}") from exc
        return _session_resource(runtime)

    @app.get("/sessions", response_model=list[SessionResource])
    def list_sessions():
        return [_session_resource(r) for r in state.sessions.values()]

    @app.get("/sessions/{session_id}/history")
    def get_history(session_id: str):
        runtime = state.sessions.get(session_id)
        if runtime is None:
            raise HTTPException(status_code=404, detail="unknown session")
        return {"messages": [message_to_dict(m) for m in runtime.session.history]}

    @app.post("/sessions/{session_id}/messages")
    def post_message(session_id: str, request: PostMessageRequest):
        runtime = state.sessions.get(session_id)
        if runtime is None:
            raise HTTPException(status_code=404, detail="unknown session")
        with state._lock:
            if runtime.busy:
                raise HTTPException(status_code=409, detail="a turn is already in flight")
            runtime.busy = True

        events: queue.Queue = queue.Queue()
        history_before = len(runtime.session.history)

        def work():
            try:
                for event in run_turn(runtime.session, request.text):
                    events.put(event_to_dict(event))
            finally:
                for message in runtime.session.history[history_before:]:
                    state.append_log(session_id, {"kind": "message", "message": message_to_dict(message)})
                runtime.busy = False
                events.put(None)

        # The worker owns the turn: it finishes even if the client disconnects.
        threading.Thread(target=work, daemon=True).start()

        def stream():
            while True:
                item = events.get()
                if item is None:
                    break
                yield f"data: {json.dumps(item, ensure_ascii=False)}\n\n"

        return StreamingResponse(stream(), media_type="text/event-stream")

    if frontend_dir is not None and Path(frontend_dir).exists():
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=str(frontend_dir), html=True), name="ui")

        @app.get("/", include_in_schema=False)
        def index():
            return RedirectResponse("/ui/")

    return app


def turn_result_from_events(events: list[dict]) -> dict | None:
    """Convenience for clients/tests: pull the terminal event out of a stream."""
    for event in reversed(events):
        if event.get("type") in ("turn_complete", "error"):
            return event
    return None


def default_frontend_dir() -> Path | None:
    """frontend/dist when running from a checkout; None when not present."""
    candidate = Path(__file__).resolve().parents[2] / "frontend" / "dist"
    return candidate if candidate.exists() else None


def make_state_for_graph(
    bundles: dict[str, GraphBundle],
    gateway: Gateway,
    model: str,
    **kwargs,
) -> ServiceState:
    return ServiceState(bundles, gateway, model, **kwargs)


def unique_session_id() -> str:
    return uuid.uuid4().hex


__all__ = [
    "AgentSession",
    "CreateSessionRequest",
    "ErrorEvent",
    "GraphBundle",
    "GraphViewResponse",
    "PostMessageRequest",
    "ServiceState",
    "SessionResource",
    "TurnCompleteEvent",
    "create_app",
    "default_frontend_dir",
    "turn_result_from_events",
]
