"""Provider-agnostic chat and embedding gateway.

The gateway owns token accounting and cost attribution: every chat or embed
call appends exactly one record to the usage ledger, tagged so a turn or a
benchmark record can total its own spend. Wire-level providers live in
providers.py; tests and offline runs use the scripted mock below, which is
deterministic and fails loudly on any request its script does not cover.
"""

from __future__ import annotations

import hashlib
import json
import math
import struct
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

import yaml

from .errors import ConfigurationError, GatewayError, ValidationError


@dataclass
class ToolCall:
    id: str
    name: str
    arguments: dict


@dataclass
class ToolDescriptor:
    name: str
    description: str
    parameters: dict  # JSON schema for the arguments object


@dataclass
class Message:
    role: str  # system | user | assistant | tool
    content: str = ""
    tool_calls: list[ToolCall] = field(default_factory=list)
    tool_call_id: str | None = None


@dataclass
class ChatRequest:
    model: str
    messages: list[Message]
    tools: list[ToolDescriptor] = field(default_factory=list)
    temperature: float | None = None
    max_output_tokens: int | None = None


@dataclass
class TokenUsage:
    input_tokens: int = 0
    output_tokens: int = 0

    def __post_init__(self):
        if self.input_tokens < 0 or self.output_tokens < 0:
            raise ValidationError("token counts must be nonnegative")

    def __add__(self, other: "TokenUsage") -> "TokenUsage":
        return TokenUsage(
            self.input_tokens + other.input_tokens,
            self.output_tokens + other.output_tokens,
        )


@dataclass
class ChatResponse:
    content: str
    tool_calls: list[ToolCall] = field(default_factory=list)
    usage: TokenUsage = field(default_factory=TokenUsage)
    finish_reason: str = "stop"


OnToken = Callable[[str], None]


class ChatProvider:
    """Interface: providers stream tokens via on_token and return the response."""

    def chat(self, request: ChatRequest, on_token: OnToken | None = None) -> ChatResponse:
        raise NotImplementedError


class Embedder:
    dim: int

    def embed(self, texts: list[str]) -> list[list[float]]:
        raise NotImplementedError


# -- cost accounting ---------------------------------------------------------


@dataclass
class ModelPrice:
    input_per_mtok: float
    output_per_mtok: float

    def __post_init__(self):
        if self.input_per_mtok < 0 or self.output_per_mtok < 0:
            raise ValidationError("prices must be nonnegative")


class CostModel:
    def __init__(self, prices: dict[str, ModelPrice], note: str = ""):
        self.prices = prices
        self.note = note

    @classmethod
    def from_file(cls, path: Path | str) -> "CostModel":
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
        prices = {
            name: ModelPrice(float(entry["input_per_mtok"]), float(entry["output_per_mtok"]))
            for name, entry in (raw.get("models") or {}).items()
        }
        return cls(prices, note=raw.get("note", ""))

    def cost(self, usage: TokenUsage, model: str) -> float:
        price = self.prices.get(model)
        if price is None:
            raise ConfigurationError(f"no price configured for model {model!r}")
        return (
            usage.input_tokens * price.input_per_mtok / 1e6
            + usage.output_tokens * price.output_per_mtok / 1e6
        )


DEFAULT_PRICES_RESOURCE = Path(__file__).parent / "data" / "model_prices.yaml"


@dataclass
class UsageRecord:
    model: str
    usage: TokenUsage
    cost: float
    tag: str | None
    kind: str  # chat | embed
    timestamp: float


class UsageLedger:
    """Append-only usage log; safe under concurrent appends."""

    def __init__(self):
        self._records: list[UsageRecord] = []
        self._lock = threading.Lock()

    def append(self, record: UsageRecord) -> None:
        with self._lock:
            self._records.append(record)

    def records(self, tag: str | None = None) -> list[UsageRecord]:
        with self._lock:
            if tag is None:
                return list(self._records)
            return [r for r in self._records if r.tag == tag]

    def totals(self, tag: str | None = None) -> tuple[TokenUsage, float]:
        usage = TokenUsage()
        cost = 0.0
        for record in self.records(tag):
            usage = usage + record.usage
            cost += record.cost
        return usage, cost

    def __len__(self) -> int:
        with self._lock:
            return len(self._records)


class Gateway:
    """Chat + embeddings facade with a shared ledger and cost model."""

    def __init__(
        self,
        provider: ChatProvider,
        embedder: Embedder,
        cost_model: CostModel | None = None,
        embed_model_name: str = "mock-embed",
    ):
        self.provider = provider
        self.embedder = embedder
        self.cost_model = cost_model or CostModel.from_file(DEFAULT_PRICES_RESOURCE)
        self.embed_model_name = embed_model_name
        self.ledger = UsageLedger()

    def chat(
        self, request: ChatRequest, on_token: OnToken | None = None, tag: str | None = None
    ) -> ChatResponse:
        response = self.provider.chat(request, on_token=on_token)
        cost = self.cost_model.cost(response.usage, request.model)
        self.ledger.append(
            UsageRecord(request.model, response.usage, cost, tag, "chat", time.time())
        )
        return response

    def embed(self, texts: list[str], tag: str | None = None) -> list[list[float]]:
        vectors = self.embedder.embed(list(texts))
        if len(vectors) != len(texts):
            raise GatewayError(f"embedder returned {len(vectors)} vectors for {len(texts)} texts")
        usage = TokenUsage(input_tokens=sum(estimate_tokens(t) for t in texts))
        cost = self.cost_model.cost(usage, self.embed_model_name)
        self.ledger.append(
            UsageRecord(self.embed_model_name, usage, cost, tag, "embed", time.time())
        )
        return vectors


def estimate_tokens(text: str) -> int:
    """Chars/4 approximation used for budgeting; provider counts are exact."""
    return math.ceil(len(text) / 4)


@dataclass
class LlmHandle:
    """A gateway bound to one model id; the unit passed to tools and scoring."""

    gateway: Gateway
    model: str

    def complete(self, prompt: str, tag: str | None = None) -> str:
        response = self.gateway.chat(
            ChatRequest(model=self.model, messages=[Message("user", prompt)]), tag=tag
        )
        return response.content


def fill_template(template: str, slots: dict[str, str]) -> str:
    """Literal {name} slot substitution; template braces elsewhere are kept."""
    for name, value in slots.items():
        template = template.replace("{" + name + "}", value)
    return template


PROMPTS_DIR = Path(__file__).parent / "prompts"


def load_prompt(name: str) -> str:
    return (PROMPTS_DIR / f"{name}.txt").read_text(encoding="utf-8")


# -- scripted mock ------------------------------------------------------------


class MockScriptError(AssertionError):
    """A request arrived that the mock script does not cover."""


Matcher = Callable[[ChatRequest], bool] | str | None


@dataclass
class ScriptedReply:
    content: str = ""
    tool_calls: list[ToolCall] = field(default_factory=list)
    usage: TokenUsage | None = None
    raise_error: Exception | None = None


@dataclass
class _ScriptEntry:
    matcher: Matcher
    reply: ScriptedReply | Callable[[ChatRequest], ScriptedReply]
    times: int | None = 1  # None = unlimited


class MockChatModel(ChatProvider):
    """Script-driven provider: ordered (matcher, reply) entries.

    A matcher is a substring of the last message's content, a predicate over
    the full request, or None (match anything). The first entry with remaining
    uses that matches wins; an unmatched request raises MockScriptError so a
    test cannot silently drift past its script. The full request transcript is
    recorded for assertions.
    """

    def __init__(self, chunk_size: int = 12):
        self.entries: list[_ScriptEntry] = []
        self.transcript: list[ChatRequest] = []
        self.chunk_size = chunk_size

    def script(self, matcher: Matcher, reply, times: int | None = 1) -> "MockChatModel":
        if isinstance(reply, str):
            reply = ScriptedReply(content=reply)
        self.entries.append(_ScriptEntry(matcher, reply, times))
        return self

    def script_error(self, matcher: Matcher, error: Exception, times: int | None = 1) -> "MockChatModel":
        self.entries.append(_ScriptEntry(matcher, ScriptedReply(raise_error=error), times))
        return self

    def _matches(self, matcher: Matcher, request: ChatRequest) -> bool:
        if matcher is None:
            return True
        if isinstance(matcher, str):
            last = request.messages[-1].content if request.messages else ""
            return matcher in last
        return bool(matcher(request))

    def chat(self, request: ChatRequest, on_token: OnToken | None = None) -> ChatResponse:
        self.transcript.append(request)
        for entry in self.entries:
            if entry.times == 0:
                continue
            if not self._matches(entry.matcher, request):
                continue
            if entry.times is not None:
                entry.times -= 1
            reply = entry.reply
            if callable(reply) and not isinstance(reply, ScriptedReply):
                reply = reply(request)
            if isinstance(reply, str):
                reply = ScriptedReply(content=reply)
            if reply.raise_error is not None:
                raise reply.raise_error
            if on_token is not None:
                for start in range(0, len(reply.content), self.chunk_size):
                    on_token(reply.content[start : start + self.chunk_size])
            usage = reply.usage or TokenUsage(
                input_tokens=sum(estimate_tokens(m.content) for m in request.messages),
                output_tokens=estimate_tokens(reply.content),
            )
            return ChatResponse(
                content=reply.content,
                tool_calls=list(reply.tool_calls),
                usage=usage,
                finish_reason="tool_calls" if reply.tool_calls else "stop",
            )
        last = request.messages[-1].content if request.messages else ""
        raise MockScriptError(
            f"no scripted reply matches request (last message: {last[:200]!r})"
        )


class MockEmbedder(Embedder):
    """Deterministic embedder: content-hash vectors with optional exact overrides."""

    def __init__(self, dim: int = 1024, overrides: dict[str, Iterable[float]] | None = None):
        self.dim = dim
        self.overrides = {k: list(v) for k, v in (overrides or {}).items()}
        self.calls: list[list[str]] = []

    def set_override(self, text: str, vector: Iterable[float]) -> None:
        vector = list(vector)
        if len(vector) != self.dim:
            raise ValidationError(f"override dimension {len(vector)} != {self.dim}")
        self.overrides[text] = vector

    def embed(self, texts: list[str]) -> list[list[float]]:
        self.calls.append(list(texts))
        return [self._vector(t) for t in texts]

    def _vector(self, text: str) -> list[float]:
        if text in self.overrides:
            return list(self.overrides[text])
        values: list[float] = []
        counter = 0
        while len(values) < self.dim:
            digest = hashlib.sha256(f"{counter}\x1f{text}".encode("utf-8")).digest()
            for offset in range(0, 32, 8):
                (raw,) = struct.unpack_from("<Q", digest, offset)
                values.append(raw / 2**63 - 1.0)
            counter += 1
        return values[: self.dim]


def extract_json_object(text: str) -> dict | None:
    """Parse the first JSON object found in text; None when there is none."""
    text = text.strip()
    try:
        obj = json.loads(text)
        if isinstance(obj, dict):
            return obj
    except json.JSONDecodeError:
        pass
    start = text.find("{")
    end = text.rfind("}")
    if start != -1 and end > start:
        try:
            obj = json.loads(text[start : end + 1])
            if isinstance(obj, dict):
                return obj
        except json.JSONDecodeError:
            return None
    return None
