"""Chat completion gateway.

One client, many providers. The live provider speaks the OpenAI-compatible
chat-completions JSON dialect over HTTPS. The scripted providers replay
canned responses keyed on (template_id, prompt hash) and make the whole
engine bit-deterministic for tests and offline runs.

Every completed call lands in a token ledger so run cost stays auditable.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping

import requests

ENV_BASE_URL = "CAESAR_LLM_BASE_URL"
ENV_API_KEY = "CAESAR_LLM_API_KEY"
ENV_MODEL = "CAESAR_LLM_MODEL"


class ProviderError(RuntimeError):
    """Non-retryable provider failure (bad request, fatal status, no script)."""


class TransientProviderError(ProviderError):
    """Retryable failure: timeouts, connection drops, 408/429/5xx."""


class CredentialError(ProviderError):
    """Raised before any network call when the credential is missing."""


def approx_token_count(text: str) -> int:
    # whitespace words times 4/3, the documented tokenizer-free approximation
    words = len(text.split())
    return math.ceil(words * 4 / 3)


def prompt_hash(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()[:16]


@dataclass(frozen=True)
class ChatRequest:
    template_id: str
    prompt: str
    system: str = ""
    temperature: float = 0.0
    reasoning_effort: str = "low"
    max_output_tokens: int = 50_000


@dataclass(frozen=True)
class ChatResponse:
    text: str
    input_token_count: int = 0
    output_token_count: int = 0
    retry_count: int = 0


@dataclass
class LedgerRow:
    template_id: str
    input_tokens: int
    output_tokens: int
    retry_count: int = 0


class TokenLedger:
    """Append-only accumulator of per-call token costs."""

    def __init__(self):
        self._rows: list[LedgerRow] = []
        self._lock = threading.Lock()

    def add(self, row: LedgerRow) -> None:
        if row.input_tokens < 0 or row.output_tokens < 0:
            raise ValueError("token counts must be >= 0")
        with self._lock:
            self._rows.append(row)

    @property
    def rows(self) -> list[LedgerRow]:
        with self._lock:
            return list(self._rows)

    def total_tokens(self) -> int:
        with self._lock:
            return sum(r.input_tokens + r.output_tokens for r in self._rows)

    def total_calls(self) -> int:
        with self._lock:
            return len(self._rows)

    def by_template(self) -> dict[str, int]:
        out: dict[str, int] = {}
        with self._lock:
            for r in self._rows:
                out[r.template_id] = out.get(r.template_id, 0) + r.input_tokens + r.output_tokens
        return out


class ScriptedProvider:
    """Replays responses from a JSON map.

    Keys are "<template_id>:<prompt-hash>" for exact matches, with
    "<template_id>:*" accepted as a per-template fallback. A missing key is a
    hard error so a drifted prompt cannot silently change a fixture run.
    """

    name = "scripted"

    def __init__(self, script: Mapping[str, str]):
        self._script = dict(script)

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedProvider":
        data = json.loads(Path(path).read_text())
        if not isinstance(data, dict):
            raise ProviderError(f"{path}: scripted fixture must be a JSON object")
        return cls(data)

    def complete(self, request: ChatRequest) -> ChatResponse:
        key = f"{request.template_id}:{prompt_hash(request.prompt)}"
        text = self._script.get(key)
        if text is None:
            text = self._script.get(f"{request.template_id}:*")
        if text is None:
            raise ProviderError(f"scripted provider has no entry for {key}")
        return ChatResponse(
            text=text,
            input_token_count=approx_token_count(request.system + request.prompt),
            output_token_count=approx_token_count(text),
        )


class RuleProvider:
    """Wraps a deterministic function request -> response text.

    The workhorse for tests that need stateful or pattern-matched scripts
    without precomputing prompt hashes.
    """

    name = "rule"

    def __init__(self, fn: Callable[[ChatRequest], str],
                 token_counts: Callable[[ChatRequest, str], tuple[int, int]] | None = None):
        self._fn = fn
        self._token_counts = token_counts

    def complete(self, request: ChatRequest) -> ChatResponse:
        text = self._fn(request)
        if self._token_counts is not None:
            tin, tout = self._token_counts(request, text)
        else:
            tin = approx_token_count(request.system + request.prompt)
            tout = approx_token_count(text)
        return ChatResponse(text=text, input_token_count=tin, output_token_count=tout)


_TRANSIENT_STATUS = {408, 429, 500, 502, 503, 504}


class OpenAICompatProvider:
    """Live chat-completions client for any OpenAI-compatible endpoint."""

    name = "openai-compat"

    def __init__(self, base_url: str | None = None, api_key: str | None = None,
                 model: str | None = None, timeout: float = 120.0,
                 session: requests.Session | None = None):
        self.base_url = (base_url or os.environ.get(ENV_BASE_URL, "")).rstrip("/")
        self.api_key = api_key if api_key is not None else os.environ.get(ENV_API_KEY, "")
        self.model = model or os.environ.get(ENV_MODEL, "gpt-5.2")
        self.timeout = timeout
        self._session = session or requests.Session()
        self._reasoning_supported = True

    def complete(self, request: ChatRequest) -> ChatResponse:
        if not self.base_url:
            raise CredentialError(f"{ENV_BASE_URL} is not set")
        if not self.api_key:
            raise CredentialError(f"{ENV_API_KEY} is not set")
        payload: dict = {
            "model": self.model,
            "messages": ([{"role": "system", "content": request.system}] if request.system else [])
            + [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        }
        if self._reasoning_supported:
            payload["reasoning_effort"] = request.reasoning_effort
        try:
            resp = self._session.post(
                f"{self.base_url}/chat/completions",
                headers={"Authorization": f"Bearer {self.api_key}"},
                json=payload, timeout=self.timeout)
        except requests.RequestException as exc:
            raise TransientProviderError(f"transport failure: {exc}") from exc
        if resp.status_code == 400 and self._reasoning_supported \
                and "reasoning" in resp.text.lower():
            # endpoint lacks the reasoning knob, degrade gracefully once
            self._reasoning_supported = False
            payload.pop("reasoning_effort", None)
            return self.complete(request)
        if resp.status_code in _TRANSIENT_STATUS:
            raise TransientProviderError(f"provider status {resp.status_code}")
        if resp.status_code != 200:
            raise ProviderError(f"provider status {resp.status_code}: {resp.text[:200]}")
        body = resp.json()
        try:
            text = body["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderError(f"malformed completion payload: {exc}") from exc
        usage = body.get("usage") or {}
        return ChatResponse(
            text=text,
            input_token_count=int(usage.get("prompt_tokens")
                                  or approx_token_count(request.prompt)),
            output_token_count=int(usage.get("completion_tokens")
                                   or approx_token_count(text)),
        )


class ChatClient:
    """Retry wrapper plus ledger bookkeeping around a provider.

    Transient failures get 3 attempts with exponential backoff starting at
    one second. Every successful call is appended to the ledger.
    """

    def __init__(self, provider, ledger: TokenLedger | None = None,
                 attempts: int = 3, backoff: float = 1.0,
                 sleeper: Callable[[float], None] = time.sleep):
        self.provider = provider
        self.ledger = ledger if ledger is not None else TokenLedger()
        self.attempts = attempts
        self.backoff = backoff
        self._sleep = sleeper

    def complete(self, request: ChatRequest) -> ChatResponse:
        delay = self.backoff
        last: Exception | None = None
        for attempt in range(self.attempts):
            try:
                response = self.provider.complete(request)
            except TransientProviderError as exc:
                last = exc
                if attempt + 1 < self.attempts:
                    self._sleep(delay)
                    delay *= 2
                continue
            if attempt:
                response = ChatResponse(
                    text=response.text,
                    input_token_count=response.input_token_count,
                    output_token_count=response.output_token_count,
                    retry_count=attempt)
            self.ledger.add(LedgerRow(
                template_id=request.template_id,
                input_tokens=response.input_token_count,
                output_tokens=response.output_token_count,
                retry_count=response.retry_count))
            return response
        raise TransientProviderError(
            f"provider failed after {self.attempts} attempts: {last}")
