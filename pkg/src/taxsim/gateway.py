"""Uniform chat-completion access with retries and a record/replay cache.

Modes:
  live     - HTTP round trip with exponential backoff.
  record   - live, plus every exchange is appended to a JSONL cache.
  replay   - answers come from the cache only; any network use is a bug.
  scripted - answers pop from an in-memory queue (tests and offline sweeps).

The cache key is a sha256 over (model_id, prompt, temperature), so a recorded
experiment replays byte-identically on any machine. Credentials come from an
environment variable and are never written to the cache.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from collections import deque
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Iterable

GATEWAY_MODES = ("live", "record", "replay", "scripted")

DEFAULT_MAX_ATTEMPTS = 5
DEFAULT_BACKOFF_BASE = 1.0
DEFAULT_BACKOFF_FACTOR = 2.0


class GatewayError(Exception):
    """Base class for gateway failures."""


class TransportError(GatewayError):
    """All transport attempts failed; callers may fall back."""


class ReplayMissError(GatewayError):
    """A replayed run hit a prompt absent from the cache. Fatal by design:
    silently diverging from the recorded experiment would be worse."""


class ScriptExhaustedError(GatewayError):
    """The scripted reply queue ran dry."""


class CacheCorruptError(GatewayError):
    """A cache line other than a torn trailing write failed to parse."""


@dataclass(frozen=True)
class ChatRequest:
    """One self-contained prompt for a chat-completion endpoint."""

    model_id: str
    prompt: str
    temperature: float = 0.7
    max_tokens: int = 512

    def __post_init__(self) -> None:
        if not self.prompt:
            raise ValueError("prompt must be non-empty")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")


@dataclass(frozen=True)
class ChatExchange:
    """A cached request/response pair."""

    key: str
    request: ChatRequest
    response_text: str
    timestamp: float


def exchange_key(model_id: str, prompt: str, temperature: float) -> str:
    """Deterministic, platform-stable cache key for a request."""
    material = json.dumps(
        [model_id, prompt, float(temperature)],
        ensure_ascii=False,
        separators=(",", ":"),
    )
    return hashlib.sha256(material.encode("utf-8")).hexdigest()


def load_cache(path: str | Path) -> dict[str, str]:
    """Load a JSONL exchange cache into a key -> response map.

    A torn trailing line (interrupted append) is dropped; corruption anywhere
    else raises. When a key appears twice the later record wins.
    """
    entries: dict[str, str] = {}
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    for i, line in enumerate(lines):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            entries[record["key"]] = record["response"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            if i == len(lines) - 1:
                break
            raise CacheCorruptError(f"{path}: bad record on line {i + 1}") from exc
    return entries


def http_chat_transport(
    endpoint: str, api_key: str, timeout: float = 30.0
) -> Callable[[ChatRequest], str]:
    """Build the default OpenAI-style HTTP transport."""
    import requests

    url = endpoint.rstrip("/") + "/chat/completions"

    def send(request: ChatRequest) -> str:
        response = requests.post(
            url,
            json={
                "model": request.model_id,
                "messages": [{"role": "user", "content": request.prompt}],
                "temperature": request.temperature,
                "max_tokens": request.max_tokens,
            },
            headers={"Authorization": f"Bearer {api_key}"},
            timeout=timeout,
        )
        response.raise_for_status()
        return response.json()["choices"][0]["message"]["content"]

    return send


class ChatGateway:
    """Mode-switched chat access. Safe for concurrent ``complete`` calls:
    cache appends and script pops are serialized, replay lookups are
    read-only after load."""

    def __init__(
        self,
        mode: str,
        *,
        cache_path: str | Path | None = None,
        transport: Callable[[ChatRequest], str] | None = None,
        scripted_replies: Iterable[str] | None = None,
        endpoint: str = "",
        api_key_env: str = "TAXSIM_API_KEY",
        timeout: float = 30.0,
        max_attempts: int = DEFAULT_MAX_ATTEMPTS,
        backoff_base: float = DEFAULT_BACKOFF_BASE,
        backoff_factor: float = DEFAULT_BACKOFF_FACTOR,
        sleeper: Callable[[float], None] = time.sleep,
    ) -> None:
        if mode not in GATEWAY_MODES:
            raise ValueError(f"unknown gateway mode {mode!r}")
        self.mode = mode
        self._cache_path = Path(cache_path) if cache_path else None
        self._transport = transport
        self._script: deque[str] = deque(scripted_replies or ())
        self._max_attempts = max_attempts
        self._backoff_base = backoff_base
        self._backoff_factor = backoff_factor
        self._sleep = sleeper
        self._lock = threading.Lock()
        self._replay_cache: dict[str, str] = {}

        if mode == "replay":
            if self._cache_path is None:
                raise GatewayError("replay mode requires a cache path")
            self._replay_cache = load_cache(self._cache_path)
        if mode == "record" and self._cache_path is None:
            raise GatewayError("record mode requires a cache path")
        if mode in ("live", "record") and self._transport is None:
            if not endpoint:
                raise GatewayError(f"{mode} mode requires an endpoint")
            api_key = os.environ.get(api_key_env, "")
            if not api_key:
                raise GatewayError(
                    f"{mode} mode requires a credential in ${api_key_env}"
                )
            self._transport = http_chat_transport(endpoint, api_key, timeout)

    def complete(self, request: ChatRequest) -> str:
        """Resolve one request to a response text according to the mode."""
        if self.mode == "scripted":
            with self._lock:
                if not self._script:
                    raise ScriptExhaustedError("scripted reply queue is empty")
                return self._script.popleft()
        if self.mode == "replay":
            key = exchange_key(request.model_id, request.prompt, request.temperature)
            try:
                return self._replay_cache[key]
            except KeyError:
                raise ReplayMissError(
                    f"no cached exchange for key {key}; the cache does not cover "
                    "this prompt"
                ) from None
        text = self._call_with_backoff(request)
        if self.mode == "record":
            self._append_exchange(request, text)
        return text

    def _call_with_backoff(self, request: ChatRequest) -> str:
        assert self._transport is not None
        delay = self._backoff_base
        last_error: Exception | None = None
        for attempt in range(self._max_attempts):
            try:
                return self._transport(request)
            except GatewayError:
                raise
            except Exception as exc:
                last_error = exc
                if attempt < self._max_attempts - 1:
                    self._sleep(delay)
                    delay *= self._backoff_factor
        raise TransportError(
            f"transport failed after {self._max_attempts} attempts"
        ) from last_error

    def _append_exchange(self, request: ChatRequest, response_text: str) -> None:
        exchange = ChatExchange(
            key=exchange_key(request.model_id, request.prompt, request.temperature),
            request=request,
            response_text=response_text,
            timestamp=time.time(),
        )
        record = {
            "key": exchange.key,
            "model_id": exchange.request.model_id,
            "prompt": exchange.request.prompt,
            "temperature": exchange.request.temperature,
            "max_tokens": exchange.request.max_tokens,
            "response": exchange.response_text,
            "timestamp": exchange.timestamp,
        }
        line = json.dumps(record, ensure_ascii=False)
        assert self._cache_path is not None
        with self._lock:
            self._cache_path.parent.mkdir(parents=True, exist_ok=True)
            with open(self._cache_path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
