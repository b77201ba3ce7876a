"""Runtime configuration shared by the CLI and the service.

Provider endpoints and API keys come from the environment; model ids, file
paths, and retrieval defaults come from an optional YAML file (--config or
PIDGRAPH_CONFIG). Every referenced path must exist at startup.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields
from pathlib import Path

import yaml

from .abstraction import DEFAULT_RULES_RESOURCE
from .errors import ConfigurationError
from .llm import CostModel, DEFAULT_PRICES_RESOURCE, Gateway, LlmHandle, MockEmbedder
from .tools import PathRagParams

CONFIG_ENV_VAR = "PIDGRAPH_CONFIG"


@dataclass
class AppConfig:
    provider: str = "mock"  # mock | openai | anthropic | local
    model: str = "mock-chat"
    judge_model: str = "mock-judge"
    embedder: str = "mock"  # mock | http
    embed_model: str = "mock-embed"
    embedding_dim: int = 1024
    price_table: str = str(DEFAULT_PRICES_RESOURCE)
    rules_file: str = str(DEFAULT_RULES_RESOURCE)
    hop_ceiling: int = 8
    max_tool_calls_per_turn: int = 6
    memory_token_budget: int = 24000
    path_max_depth: int = 3
    path_max_breadth: int = 2
    openai_base_url: str = "https://api.openai.com/v1"
    anthropic_base_url: str = "https://api.anthropic.com"
    local_base_url: str = "http://localhost:11434/v1"
    embed_base_url: str = "https://api.voyageai.com/v1"
    openai_api_key_env: str = "OPENAI_API_KEY"
    anthropic_api_key_env: str = "ANTHROPIC_API_KEY"
    embed_api_key_env: str = "VOYAGE_API_KEY"

    @classmethod
    def load(cls, path: str | Path | None = None) -> "AppConfig":
        if path is None:
            path = os.environ.get(CONFIG_ENV_VAR) or None
        config = cls()
        if path is not None:
            raw = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
            known = {f.name for f in fields(cls)}
            unknown = set(raw) - known
            if unknown:
                raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
            for key, value in raw.items():
                setattr(config, key, value)
        config.validate()
        return config

    def validate(self) -> None:
        for name in ("price_table", "rules_file"):
            path = Path(getattr(self, name))
            if not path.exists():
                raise ConfigurationError(f"{name} path does not exist: {path}")
        if self.provider not in ("mock", "openai", "anthropic", "local"):
            raise ConfigurationError(f"unknown provider {self.provider!r}")
        if self.embedder not in ("mock", "http"):
            raise ConfigurationError(f"unknown embedder {self.embedder!r}")

    def path_rag_params(self) -> PathRagParams:
        return PathRagParams(self.path_max_depth, self.path_max_breadth)

    def cost_model(self) -> CostModel:
        return CostModel.from_file(self.price_table)

    def build_gateway(self) -> Gateway:
        from .demo import build_demo_provider

        if self.embedder == "mock":
            embedder = MockEmbedder(dim=self.embedding_dim)
        else:
            from .providers import HttpEmbedder

            embedder = HttpEmbedder(
                model=self.embed_model,
                dim=self.embedding_dim,
                base_url=self.embed_base_url,
                api_key_env=self.embed_api_key_env,
            )
        if self.provider == "mock":
            provider = build_demo_provider()
        elif self.provider == "openai":
            from .providers import OpenAiStyleProvider

            provider = OpenAiStyleProvider(self.openai_base_url, self.openai_api_key_env)
        elif self.provider == "anthropic":
            from .providers import AnthropicStyleProvider

            provider = AnthropicStyleProvider(self.anthropic_base_url, self.anthropic_api_key_env)
        else:
            from .providers import OpenAiStyleProvider

            provider = OpenAiStyleProvider(self.local_base_url, "", require_key=False)
        return Gateway(
            provider,
            embedder,
            cost_model=self.cost_model(),
            embed_model_name=self.embed_model,
        )

    def build_llm(self, gateway: Gateway | None = None) -> LlmHandle:
        return LlmHandle(gateway or self.build_gateway(), self.model)

    def build_judge(self, gateway: Gateway | None = None) -> LlmHandle:
        return LlmHandle(gateway or self.build_gateway(), self.judge_model)
