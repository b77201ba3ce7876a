"""HTTP chat/embedding providers for the two commercial wire dialects plus
OpenAI-compatible local servers.

Both dialects stream server-sent events; chunks are forwarded to on_token and
accumulated, so the final content always equals the concatenated stream.
Transport, auth, and rate-limit failures are classified for callers.
"""

from __future__ import annotations

import json
import os
from typing import Iterator

import httpx

from .errors import AuthError, ConfigurationError, ProviderError, RateLimitError, TransportError
from .llm import ChatProvider, ChatRequest, ChatResponse, Embedder, OnToken, TokenUsage, ToolCall


def _classify_status(response: httpx.Response) -> None:
    if response.status_code in (401, 403):
        raise AuthError(f"provider rejected credentials (HTTP {response.status_code})")
    if response.status_code == 429:
        retry_after = response.headers.get("retry-after")
        raise RateLimitError(
            "provider rate limit hit",
            retry_after=float(retry_after) if retry_after else None,
        )
    if response.status_code >= 400:
        raise ProviderError(f"provider error HTTP {response.status_code}: {response.text[:500]}")


def _sse_events(lines: Iterator[str]) -> Iterator[tuple[str, str]]:
    """Yield (event, data) pairs from an SSE line stream."""
    event = "message"
    data_parts: list[str] = []
    for line in lines:
        line = line.rstrip("\n").rstrip("\r")
        if line == "":
            if data_parts:
                yield event, "\n".join(data_parts)
            event = "message"
            data_parts = []
            continue
        if line.startswith("event:"):
            event = line[len("event:") :].strip()
        elif line.startswith("data:"):
            data_parts.append(line[len("data:") :].strip())
    if data_parts:
        yield event, "\n".join(data_parts)


def _api_key(env_var: str) -> str:
    key = os.environ.get(env_var, "")
    if not key:
        raise ConfigurationError(f"environment variable {env_var} is not set")
    return key


class OpenAiStyleProvider(ChatProvider):
    """Chat-completions dialect: also serves OpenAI-compatible local servers."""

    def __init__(
        self,
        base_url: str = "https://api.openai.com/v1",
        api_key_env: str = "OPENAI_API_KEY",
        timeout: float = 120.0,
        transport: httpx.BaseTransport | None = None,
        require_key: bool = True,
    ):
        self.base_url = base_url.rstrip("/")
        self.api_key_env = api_key_env
        self.require_key = require_key
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def _headers(self) -> dict:
        headers = {"content-type": "application/json"}
        if self.require_key:
            headers["authorization"] = f"Bearer {_api_key(self.api_key_env)}"
        return headers

    def chat(self, request: ChatRequest, on_token: OnToken | None = None) -> ChatResponse:
        payload: dict = {
            "model": request.model,
            "messages": [self._encode_message(m) for m in request.messages],
            "stream": True,
            "stream_options": {"include_usage": True},
        }
        if request.tools:
            payload["tools"] = [
                {
                    "type": "function",
                    "function": {
                        "name": t.name,
                        "description": t.description,
                        "parameters": t.parameters,
                    },
                }
                for t in request.tools
            ]
        if request.temperature is not None:
            payload["temperature"] = request.temperature
        if request.max_output_tokens is not None:
            payload["max_tokens"] = request.max_output_tokens

        try:
            with self._client.stream(
                "POST", f"{self.base_url}/chat/completions", json=payload, headers=self._headers()
            ) as response:
                if response.status_code >= 400:
                    response.read()
                    _classify_status(response)
                return self._consume_stream(response, on_token)
        except httpx.HTTPError as exc:
            raise TransportError(f"transport failure: {exc}") from exc

    @staticmethod
    def _encode_message(message) -> dict:
        encoded: dict = {"role": message.role, "content": message.content}
        if message.tool_calls:
            encoded["tool_calls"] = [
                {
                    "id": c.id,
                    "type": "function",
                    "function": {"name": c.name, "arguments": json.dumps(c.arguments)},
                }
                for c in message.tool_calls
            ]
        if message.tool_call_id:
            encoded["tool_call_id"] = message.tool_call_id
        return encoded

    def _consume_stream(self, response: httpx.Response, on_token: OnToken | None) -> ChatResponse:
        content_parts: list[str] = []
        tool_parts: dict[int, dict] = {}
        usage = TokenUsage()
        finish_reason = "stop"
        for _event, data in _sse_events(response.iter_lines()):
            if data == "[DONE]":
                break
            chunk = json.loads(data)
            if chunk.get("usage"):
                usage = TokenUsage(
                    chunk["usage"].get("prompt_tokens", 0),
                    chunk["usage"].get("completion_tokens", 0),
                )
            for choice in chunk.get("choices", []):
                if choice.get("finish_reason"):
                    finish_reason = choice["finish_reason"]
                delta = choice.get("delta", {})
                piece = delta.get("content")
                if piece:
                    content_parts.append(piece)
                    if on_token is not None:
                        on_token(piece)
                for tc in delta.get("tool_calls", []) or []:
                    slot = tool_parts.setdefault(
                        tc.get("index", 0), {"id": "", "name": "", "arguments": ""}
                    )
                    if tc.get("id"):
                        slot["id"] = tc["id"]
                    fn = tc.get("function", {})
                    if fn.get("name"):
                        slot["name"] = fn["name"]
                    if fn.get("arguments"):
                        slot["arguments"] += fn["arguments"]
        tool_calls = [
            ToolCall(slot["id"], slot["name"], json.loads(slot["arguments"] or "{}"))
            for _, slot in sorted(tool_parts.items())
        ]
        return ChatResponse("".join(content_parts), tool_calls, usage, finish_reason)


class AnthropicStyleProvider(ChatProvider):
    """Messages dialect with event-typed SSE frames."""

    def __init__(
        self,
        base_url: str = "https://api.anthropic.com",
        api_key_env: str = "ANTHROPIC_API_KEY",
        version: str = "2023-06-01",
        timeout: float = 120.0,
        transport: httpx.BaseTransport | None = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.api_key_env = api_key_env
        self.version = version
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def chat(self, request: ChatRequest, on_token: OnToken | None = None) -> ChatResponse:
        system_parts = [m.content for m in request.messages if m.role == "system"]
        payload: dict = {
            "model": request.model,
            "max_tokens": request.max_output_tokens or 4096,
            "stream": True,
            "messages": [self._encode_message(m) for m in request.messages if m.role != "system"],
        }
        if system_parts:
            payload["system"] = "\n\n".join(system_parts)
        if request.tools:
            payload["tools"] = [
                {"name": t.name, "description": t.description, "input_schema": t.parameters}
                for t in request.tools
            ]
        if request.temperature is not None:
            payload["temperature"] = request.temperature
        headers = {
            "content-type": "application/json",
            "x-api-key": _api_key(self.api_key_env),
            "anthropic-version": self.version,
        }
        try:
            with self._client.stream(
                "POST", f"{self.base_url}/v1/messages", json=payload, headers=headers
            ) as response:
                if response.status_code >= 400:
                    response.read()
                    _classify_status(response)
                return self._consume_stream(response, on_token)
        except httpx.HTTPError as exc:
            raise TransportError(f"transport failure: {exc}") from exc

    @staticmethod
    def _encode_message(message) -> dict:
        if message.role == "tool":
            return {
                "role": "user",
                "content": [
                    {
                        "type": "tool_result",
                        "tool_use_id": message.tool_call_id,
                        "content": message.content,
                    }
                ],
            }
        if message.tool_calls:
            blocks: list[dict] = []
            if message.content:
                blocks.append({"type": "text", "text": message.content})
            blocks.extend(
                {"type": "tool_use", "id": c.id, "name": c.name, "input": c.arguments}
                for c in message.tool_calls
            )
            return {"role": "assistant", "content": blocks}
        return {"role": message.role, "content": message.content}

    def _consume_stream(self, response: httpx.Response, on_token: OnToken | None) -> ChatResponse:
        content_parts: list[str] = []
        tool_blocks: dict[int, dict] = {}
        input_tokens = 0
        output_tokens = 0
        finish_reason = "stop"
        for event, data in _sse_events(response.iter_lines()):
            if not data:
                continue
            chunk = json.loads(data)
            kind = chunk.get("type", event)
            if kind == "message_start":
                input_tokens = chunk.get("message", {}).get("usage", {}).get("input_tokens", 0)
            elif kind == "content_block_start":
                block = chunk.get("content_block", {})
                if block.get("type") == "tool_use":
                    tool_blocks[chunk.get("index", 0)] = {
                        "id": block.get("id", ""),
                        "name": block.get("name", ""),
                        "json": "",
                    }
            elif kind == "content_block_delta":
                delta = chunk.get("delta", {})
                if delta.get("type") == "text_delta":
                    piece = delta.get("text", "")
                    if piece:
                        content_parts.append(piece)
                        if on_token is not None:
                            on_token(piece)
                elif delta.get("type") == "input_json_delta":
                    index = chunk.get("index", 0)
                    if index in tool_blocks:
                        tool_blocks[index]["json"] += delta.get("partial_json", "")
            elif kind == "message_delta":
                output_tokens = chunk.get("usage", {}).get("output_tokens", output_tokens)
                if chunk.get("delta", {}).get("stop_reason"):
                    finish_reason = chunk["delta"]["stop_reason"]
        tool_calls = [
            ToolCall(block["id"], block["name"], json.loads(block["json"] or "{}"))
            for _, block in sorted(tool_blocks.items())
        ]
        return ChatResponse(
            "".join(content_parts), tool_calls, TokenUsage(input_tokens, output_tokens), finish_reason
        )


class HttpEmbedder(Embedder):
    """Embeddings endpoint client; covers the OpenAI and Voyage wire shapes."""

    def __init__(
        self,
        model: str,
        dim: int = 1024,
        base_url: str = "https://api.voyageai.com/v1",
        api_key_env: str = "VOYAGE_API_KEY",
        timeout: float = 60.0,
        transport: httpx.BaseTransport | None = None,
    ):
        self.model = model
        self.dim = dim
        self.base_url = base_url.rstrip("/")
        self.api_key_env = api_key_env
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def embed(self, texts: list[str]) -> list[list[float]]:
        if not texts:
            return []
        headers = {
            "content-type": "application/json",
            "authorization": f"Bearer {_api_key(self.api_key_env)}",
        }
        try:
            response = self._client.post(
                f"{self.base_url}/embeddings",
                json={"model": self.model, "input": texts},
                headers=headers,
            )
        except httpx.HTTPError as exc:
            raise TransportError(f"transport failure: {exc}") from exc
        _classify_status(response)
        payload = response.json()
        vectors = [entry["embedding"] for entry in payload.get("data", [])]
        for vector in vectors:
            if len(vector) != self.dim:
                raise ProviderError(
                    f"embedding dimension {len(vector)} does not match configured {self.dim}"
                )
        return vectors
