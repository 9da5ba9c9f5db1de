"""LLM and embedding providers: an OpenAI-compatible HTTP client and an offline mock."""
from .base import Provider
from .http import HttpProvider
from .mock import MockProvider, ScriptMissError, hash_embedding, load_mock_script
from .summary import extractive_summary, split_sentences
from .types import (
    DEFAULT_MODELS,
    MULTI_QUERY_TEMPERATURE,
    ChatMessage,
    ChatRequest,
    MalformedResponseError,
    NoRouteError,
    ProviderConfig,
    ProviderConfigError,
    ProviderError,
    ProviderHTTPError,
    RetryExhaustedError,
    SummaryConfig,
    Task,
    ToolCall,
    ToolSpec,
    temperature_for,
)

__all__ = [
    "DEFAULT_MODELS", "MULTI_QUERY_TEMPERATURE", "ChatMessage", "ChatRequest", "HttpProvider",
    "MalformedResponseError", "MockProvider", "NoRouteError", "Provider", "ProviderConfig",
    "ProviderConfigError", "ProviderError", "ProviderHTTPError", "RetryExhaustedError",
    "ScriptMissError", "SummaryConfig", "Task", "ToolCall", "ToolSpec", "extractive_summary",
    "hash_embedding", "load_mock_script", "split_sentences", "temperature_for",
]
