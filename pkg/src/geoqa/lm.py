"""Language-model client interface with an offline-friendly default.

Every pipeline stage talks to a client through ``submit(parts) -> text`` and
falls back to its deterministic rule path when the call fails, so the engine
stays fully functional (and reproducible) with no model configured.
"""

from __future__ import annotations

import os
from importlib import resources
from typing import Iterable, Protocol

import httpx

DEFAULT_TIMEOUT_S = 10.0


class LmError(Exception):
    """The client could not produce a completion."""


class LanguageModelClient(Protocol):
    def submit(self, parts: Iterable[str]) -> str:
        """Join prompt parts, send them, and return the completion text."""
        ...


class NullLanguageModel:
    """Stands in when no provider is configured; always triggers fallback."""

    def submit(self, parts: Iterable[str]) -> str:
        raise LmError("no language model configured")


class StaticLanguageModel:
    """Test double returning queued or constant responses."""

    def __init__(self, responses: list[str] | None = None, default: str | None = None):
        self.responses = list(responses or [])
        self.default = default
        self.calls: list[str] = []

    def submit(self, parts: Iterable[str]) -> str:
        prompt = "\n".join(parts)
        self.calls.append(prompt)
        if self.responses:
            return self.responses.pop(0)
        if self.default is not None:
            return self.default
        raise LmError("static model exhausted")


class HttpLanguageModel:
    """OpenAI-style chat-completions client.

    Reads the API key from GEOQA_LM_API_KEY and the endpoint from
    GEOQA_LM_BASE_URL (default https://api.openai.com/v1).
    """

    def __init__(
        self,
        model: str = "gpt-4o-mini",
        base_url: str | None = None,
        timeout_s: float = DEFAULT_TIMEOUT_S,
    ):
        self.model = model
        self.base_url = (base_url or os.environ.get("GEOQA_LM_BASE_URL") or "https://api.openai.com/v1").rstrip("/")
        self.timeout_s = timeout_s
        self.api_key = os.environ.get("GEOQA_LM_API_KEY", "")

    def submit(self, parts: Iterable[str]) -> str:
        if not self.api_key:
            raise LmError("GEOQA_LM_API_KEY is not set")
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": "\n".join(parts)}],
            "temperature": 0,
        }
        try:
            response = httpx.post(
                f"{self.base_url}/chat/completions",
                json=payload,
                headers={"Authorization": f"Bearer {self.api_key}"},
                timeout=self.timeout_s,
            )
            response.raise_for_status()
            return response.json()["choices"][0]["message"]["content"]
        except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
            raise LmError(f"language model call failed: {exc}") from exc


def load_prompt(stage: str) -> str:
    """Stage prompt template from the packaged assets (non-canonical text)."""
    path = resources.files("geoqa").joinpath("assets", "prompts", f"{stage}.txt")
    return path.read_text(encoding="utf-8")
