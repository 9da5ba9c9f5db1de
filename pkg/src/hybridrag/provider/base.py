"""The provider interface shared by the HTTP client and the mock."""
from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Sequence

import numpy as np

from .types import ChatMessage, ChatRequest, ProviderConfig, SummaryConfig, Task, ToolCall, ToolSpec, temperature_for

SUMMARY_SYSTEM_PROMPT = (
    "You condense documents from an academic institution. Reply with a plain-text summary "
    "of at most {max_length} words that keeps names, programs, events and outcomes."
)


class Provider(ABC):
    """Chat, tool selection, embeddings and summarisation.

    Callers normally go through ``request`` so that model choice and
    temperature follow the per-task policy.
    """

    config: ProviderConfig

    def request(self, task: Task, messages: Sequence[ChatMessage], tools: Sequence[ToolSpec] = (),
                max_tokens: int | None = None) -> ChatRequest:
        return ChatRequest(
            model=self.config.model_for(task),
            messages=tuple(messages),
            temperature=temperature_for(task),
            max_tokens=max_tokens,
            tools=tuple(tools),
            tool_choice="auto" if tools else None,
            task=task,
        )

    def ask(self, task: Task, prompt: str, system: str | None = None) -> str:
        """Single-turn chat helper."""
        messages = [ChatMessage("system", system)] if system else []
        messages.append(ChatMessage("user", prompt))
        return self.chat(self.request(task, messages))

    @abstractmethod
    def chat(self, req: ChatRequest) -> str: ...

    @abstractmethod
    def call_tool(self, req: ChatRequest) -> ToolCall: ...

    @abstractmethod
    def embed(self, texts: Sequence[str]) -> list[np.ndarray]: ...

    @abstractmethod
    def summarize(self, text: str, cfg: SummaryConfig | None = None) -> str: ...
