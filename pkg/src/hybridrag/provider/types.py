"""Request/response types, task routing and the temperature policy."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any

ROLES = ("system", "user", "assistant")


class ProviderError(RuntimeError):
    pass


class ProviderConfigError(ProviderError):
    pass


class ProviderHTTPError(ProviderError):
    def __init__(self, message: str, status: int | None = None) -> None:
        super().__init__(message)
        self.status = status


class RetryExhaustedError(ProviderHTTPError):
    """Every attempt failed; ``status`` is the last HTTP status seen (None for transport errors)."""


class MalformedResponseError(ProviderError):
    pass


class NoRouteError(ProviderError):
    """The model answered without selecting one of the offered tools."""


class Task(str, enum.Enum):
    ROUTE = "route"
    MULTI_QUERY = "multi_query"
    SUBQUERY = "subquery"
    CYPHER = "cypher"
    GENERATE = "generate"
    EXTRACT = "extract"
    SUMMARIZE = "summarize"
    CLASSIFY = "classify"
    JUDGE = "judge"
    EMBED = "embed"


MULTI_QUERY_TEMPERATURE = 0.15


def temperature_for(task: Task) -> float:
    # only multi-query expansion gets any sampling freedom
    return MULTI_QUERY_TEMPERATURE if task is Task.MULTI_QUERY else 0.0


DEFAULT_MODELS = {
    Task.ROUTE: "gpt-3.5-turbo-0125",
    Task.MULTI_QUERY: "gpt-3.5-turbo-0125",
    Task.SUBQUERY: "gpt-3.5-turbo-0125",
    Task.CYPHER: "gpt-3.5-turbo-16k",
    Task.GENERATE: "gpt-3.5-turbo-0125",
    Task.EXTRACT: "gpt-3.5-turbo-16k",
    Task.SUMMARIZE: "gpt-3.5-turbo-0125",
    Task.CLASSIFY: "gpt-3.5-turbo-0125",
    Task.JUDGE: "gpt-3.5-turbo-0125",
    Task.EMBED: "text-embedding-3-small",
}


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise ValueError(f"unknown chat role {self.role!r}")
        if self.role in ("system", "user") and not self.content:
            raise ValueError(f"{self.role} message content must not be empty")

    def to_wire(self) -> dict[str, str]:
        return {"role": self.role, "content": self.content}


@dataclass(frozen=True)
class ToolSpec:
    name: str
    description: str
    parameters: dict[str, Any] = field(default_factory=lambda: {"type": "object", "properties": {}})

    def to_wire(self) -> dict[str, Any]:
        return {
            "type": "function",
            "function": {"name": self.name, "description": self.description, "parameters": self.parameters},
        }


@dataclass(frozen=True)
class ToolCall:
    name: str
    arguments: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class ChatRequest:
    """One chat completion call. ``task`` is local bookkeeping and never sent."""

    model: str
    messages: tuple[ChatMessage, ...]
    temperature: float = 0.0
    max_tokens: int | None = None
    tools: tuple[ToolSpec, ...] = ()
    tool_choice: str | None = None
    task: Task | None = None

    def __post_init__(self) -> None:
        if not self.messages:
            raise ValueError("a chat request needs at least one message")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")

    @property
    def prompt(self) -> str:
        """All message contents joined by newlines; what mock rules match against."""
        return "\n".join(m.content for m in self.messages)

    def to_wire(self) -> dict[str, Any]:
        body: dict[str, Any] = {
            "model": self.model,
            "messages": [m.to_wire() for m in self.messages],
            "temperature": self.temperature,
        }
        if self.max_tokens is not None:
            body["max_tokens"] = self.max_tokens
        if self.tools:
            body["tools"] = [t.to_wire() for t in self.tools]
            body["tool_choice"] = self.tool_choice or "auto"
        return body


@dataclass
class ProviderConfig:
    base_url: str = "https://api.openai.com"
    api_key_env_var: str = "OPENAI_API_KEY"
    timeout_seconds: float = 60.0
    max_retries: int = 3
    backoff_base: float = 1.0
    backoff_factor: float = 2.0
    jitter: float = 0.2
    models: dict[Task, str] = field(default_factory=lambda: dict(DEFAULT_MODELS))

    def __post_init__(self) -> None:
        if self.max_retries < 0:
            raise ProviderConfigError("max_retries must be >= 0")
        if self.timeout_seconds <= 0:
            raise ProviderConfigError("timeout_seconds must be positive")
        self.models = {Task(k): v for k, v in self.models.items()}
        for task in Task:
            self.models.setdefault(task, DEFAULT_MODELS[task])

    def model_for(self, task: Task) -> str:
        return self.models[task]


@dataclass(frozen=True)
class SummaryConfig:
    max_length: int = 256

    def __post_init__(self) -> None:
        if self.max_length < 1:
            raise ValueError("max_length must be >= 1")
