"""ReAct-style agent loop: the LLM selects and parameterizes retrieval tools,
their outputs feed back as context, and the loop ends in a final answer.

Each turn emits an event stream: tokens, (tool_started, tool_finished) pairs,
and exactly one terminal turn_complete or error. A per-turn ledger enforces
the call ceiling; in benchmark mode a tool may run only once per turn and a
repeated request is refused with the refusal injected as the tool output.
Usage and cost are attributed to the turn via gateway ledger tags.
"""

from __future__ import annotations

import json
import time
import uuid
from dataclasses import dataclass, field
from typing import Iterator, Union

from .errors import PidGraphError
from .llm import ChatRequest, Message, TokenUsage, estimate_tokens, load_prompt
from .tools import Toolkit, run_tool, summarize_result, tool_descriptors


@dataclass
class TokenEvent:
    text: str


@dataclass
class ToolStartedEvent:
    name: str
    args: dict


@dataclass
class ToolFinishedEvent:
    name: str
    result_summary: str
    duration: float


@dataclass
class TurnCompleteEvent:
    answer: str
    usage: TokenUsage
    cost: float
    limit_reached: bool = False


@dataclass
class ErrorEvent:
    detail: str


AgentEvent = Union[TokenEvent, ToolStartedEvent, ToolFinishedEvent, TurnCompleteEvent, ErrorEvent]


def event_to_dict(event: AgentEvent) -> dict:
    if isinstance(event, TokenEvent):
        return {"type": "token", "text": event.text}
    if isinstance(event, ToolStartedEvent):
        return {"type": "tool_started", "name": event.name, "args": event.args}
    if isinstance(event, ToolFinishedEvent):
        return {
            "type": "tool_finished",
            "name": event.name,
            "result_summary": event.result_summary,
            "duration": event.duration,
        }
    if isinstance(event, TurnCompleteEvent):
        return {
            "type": "turn_complete",
            "answer": event.answer,
            "usage": {
                "input_tokens": event.usage.input_tokens,
                "output_tokens": event.usage.output_tokens,
            },
            "cost": event.cost,
            "limit_reached": event.limit_reached,
        }
    if isinstance(event, ErrorEvent):
        return {"type": "error", "detail": event.detail}
    raise TypeError(f"unknown event {event!r}")


@dataclass
class AgentLimits:
    max_tool_calls_per_turn: int = 6
    benchmark_once_per_tool: bool = False
    memory_token_budget: int = 24000


@dataclass
class AgentSession:
    session_id: str
    toolkit: Toolkit
    limits: AgentLimits = field(default_factory=AgentLimits)
    history: list[Message] = field(default_factory=list)
    allowed_tools: list[str] | None = None  # None = all four
    turn_counter: int = 0
    turn_tool_ledger: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not self.history:
            self.history.append(Message("system", load_prompt("agent_system")))


def new_session(toolkit: Toolkit, limits: AgentLimits | None = None, session_id: str | None = None) -> AgentSession:
    return AgentSession(
        session_id=session_id or uuid.uuid4().hex,
        toolkit=toolkit,
        limits=limits or AgentLimits(),
    )


def _message_tokens(message: Message) -> int:
    total = estimate_tokens(message.content)
    for call in message.tool_calls:
        total += estimate_tokens(call.name + json.dumps(call.arguments))
    return total


def memory_window(session: AgentSession) -> list[Message]:
    """History truncated into the token budget.

    The system prompt and the newest exchange always survive; whole exchanges
    (a user message plus everything up to the next user message) are evicted
    oldest-first, so a tool result is never separated from its call.
    """
    history = session.history
    if not history:
        return []
    system = [m for m in history[:1] if m.role == "system"]
    rest = history[len(system) :]

    exchanges: list[list[Message]] = []
    for message in rest:
        if message.role == "user" or not exchanges:
            exchanges.append([message])
        else:
            exchanges[-1].append(message)

    budget = session.limits.memory_token_budget

    def total(selected: list[list[Message]]) -> int:
        return sum(_message_tokens(m) for m in system) + sum(
            _message_tokens(m) for group in selected for m in group
        )

    kept = list(exchanges)
    while len(kept) > 1 and total(kept) > budget:
        kept.pop(0)
    return system + [m for group in kept for m in group]


def _stream_chat(session: AgentSession, messages: list[Message], tools, tag: str):
    """Generator yielding TokenEvents, returning the ChatResponse."""
    gateway = session.toolkit.llm.gateway
    model = session.toolkit.llm.model
    pending: list[str] = []
    response = gateway.chat(
        ChatRequest(model=model, messages=messages, tools=list(tools)),
        on_token=pending.append,
        tag=tag,
    )
    for piece in pending:
        yield TokenEvent(piece)
    return response


def run_turn(session: AgentSession, user_message: str) -> Iterator[AgentEvent]:
    """Run one conversational turn; yields events ending in turn_complete/error."""
    session.turn_counter += 1
    session.turn_tool_ledger = []
    tag = f"{session.session_id}:turn{session.turn_counter}"
    session.history.append(Message("user", user_message))
    descriptors = [
        d
        for d in tool_descriptors()
        if session.allowed_tools is None or d.name in session.allowed_tools
    ]
    limits = session.limits
    limit_reached = False
    rounds = 0

    try:
        while True:
            rounds += 1
            if rounds > limits.max_tool_calls_per_turn + 3:
                limit_reached = True

            offered = [] if limit_reached else descriptors
            response = yield from _stream_chat(session, memory_window(session), offered, tag)

            if not response.tool_calls:
                session.history.append(Message("assistant", response.content))
                usage, cost = session.toolkit.llm.gateway.ledger.totals(tag)
                yield TurnCompleteEvent(response.content, usage, cost, limit_reached)
                return

            session.history.append(
                Message("assistant", response.content, tool_calls=list(response.tool_calls))
            )
            for call in response.tool_calls:
                if limits.benchmark_once_per_tool and call.name in session.turn_tool_ledger:
                    refusal = (
                        f"Tool {call.name} was already called this turn and may be "
                        "called only once; answer from the context gathered so far."
                    )
                    yield ToolStartedEvent(call.name, call.arguments)
                    yield ToolFinishedEvent(call.name, "refused: once-per-turn limit", 0.0)
                    session.history.append(Message("tool", refusal, tool_call_id=call.id))
                    continue
                if len(session.turn_tool_ledger) >= limits.max_tool_calls_per_turn:
                    limit_reached = True
                    session.history.append(
                        Message(
                            "tool",
                            "Tool call limit for this turn is exhausted; synthesize the final "
                            "answer from the context gathered so far.",
                            tool_call_id=call.id,
                        )
                    )
                    continue

                yield ToolStartedEvent(call.name, call.arguments)
                started = time.perf_counter()
                try:
                    result = run_tool(session.toolkit, call.name, call.arguments, tag=tag)
                    summary = summarize_result(result)
                    output = result.content
                except PidGraphError as exc:
                    summary = f"error: {exc}"
                    output = f"Tool {call.name} failed: {exc}"
                duration = time.perf_counter() - started
                yield ToolFinishedEvent(call.name, summary, duration)
                session.turn_tool_ledger.append(call.name)
                session.history.append(Message("tool", output, tool_call_id=call.id))
    except Exception as exc:  # noqa: BLE001 - the terminal error event must fire
        yield ErrorEvent(f"{type(exc).__name__}: {exc}")


def message_to_dict(message: Message) -> dict:
    out: dict = {"role": message.role, "content": message.content}
    if message.tool_calls:
        out["tool_calls"] = [
            {"id": c.id, "name": c.name, "arguments": c.arguments} for c in message.tool_calls
        ]
    if message.tool_call_id:
        out["tool_call_id"] = message.tool_call_id
    return out
