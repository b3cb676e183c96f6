"""Chat-completion clients.

Two HTTP dialects are supported, OpenAI-compatible ``/v1/chat/completions``
and Ollama-compatible ``/api/chat``, plus a scripted mock used for tests and
desk-scale dry runs. Every request is a single user message with no system
prompt. Text comes back exactly as the endpoint sent it.
"""

from __future__ import annotations

import hashlib
import logging
import math
import os
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Mapping

import httpx
import yaml

from .errors import (
    ConfigError,
    ProviderRejectedError,
    ScriptCoverageError,
    TransientExhaustedError,
    WireFormatError,
)

log = logging.getLogger(__name__)

KINDS = ("openai-compatible", "ollama-compatible", "mock")
KEY_ENV_PREFIX = "RNGAUDIT_KEY_"
DEFAULT_MAX_TOKENS = 512


@dataclass
class ProviderConfig:
    name: str
    kind: str
    model_id: str = ""
    base_url: str | None = None
    api_key_ref: str | None = None
    timeout: float = 120.0
    max_retries: int = 3
    max_in_flight: int = 4
    min_interval: float = 0.0
    backoff_base: float = 1.0
    backoff_cap: float = 60.0
    mock_script: Any = None  # path, mapping or MockScript

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"provider {self.name!r}: unknown kind {self.kind!r}")
        if self.kind == "mock":
            if self.mock_script is None:
                raise ConfigError(f"provider {self.name!r}: mock providers need a mock_script")
        elif not self.base_url:
            raise ConfigError(f"provider {self.name!r}: {self.kind} providers need a base_url")
        if self.max_retries < 0:
            raise ConfigError("max_retries must be >= 0")
        if self.max_in_flight < 1:
            raise ConfigError("max_in_flight must be >= 1")

    @classmethod
    def from_dict(cls, d: Mapping[str, Any], base_dir: Path | None = None) -> "ProviderConfig":
        d = dict(d)
        script = d.get("mock_script")
        if isinstance(script, str) and base_dir is not None and not Path(script).is_absolute():
            d["mock_script"] = str(base_dir / script)
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"provider {d.get('name')!r}: unknown fields {sorted(unknown)}")
        return cls(**d)

    def api_key(self) -> str | None:
        if not self.api_key_ref:
            return None
        var = KEY_ENV_PREFIX + self.api_key_ref.upper()
        key = os.environ.get(var)
        if not key:
            raise ConfigError(f"provider {self.name!r}: environment variable {var} is not set")
        return key


@dataclass(frozen=True)
class CompletionRequest:
    model_id: str
    prompt: str
    temperature: float
    max_tokens: int = DEFAULT_MAX_TOKENS
    # routing metadata; only the mock looks at these
    language: str | None = None
    upper: int | None = None
    call_index: int | None = None

    def __post_init__(self):
        if not (0.0 <= self.temperature <= 2.0):
            raise ValueError(f"temperature must lie in [0, 2], got {self.temperature}")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be positive")


@dataclass(frozen=True)
class CompletionResponse:
    text: str
    latency_ms: float
    attempts: int


class _Transient(Exception):
    """Retryable failure: timeout, connection error, HTTP 429 or 5xx."""


class Provider:
    """Shared retry, backoff and concurrency handling."""

    def __init__(self, config: ProviderConfig, sleep: Callable[[float], None] = time.sleep):
        self.config = config
        self._sleep = sleep
        self._slots = threading.BoundedSemaphore(config.max_in_flight)
        self._pace_lock = threading.Lock()
        self._next_start = 0.0

    def backoff_delay(self, retry: int) -> float:
        """Seconds to wait before retry number ``retry`` (1-based); non-decreasing."""
        return min(self.config.backoff_cap, self.config.backoff_base * 2 ** (retry - 1))

    def _pace(self) -> None:
        if self.config.min_interval <= 0:
            return
        with self._pace_lock:
            now = time.monotonic()
            wait = self._next_start - now
            self._next_start = max(now, self._next_start) + self.config.min_interval
        if wait > 0:
            self._sleep(wait)

    def complete(self, request: CompletionRequest) -> CompletionResponse:
        attempts = 0
        last: Exception | None = None
        with self._slots:
            t0 = time.perf_counter()
            while attempts <= self.config.max_retries:
                if attempts:
                    self._sleep(self.backoff_delay(attempts))
                attempts += 1
                self._pace()
                try:
                    text = self._attempt(request)
                except _Transient as exc:
                    last = exc.__cause__ or exc
                    log.debug("%s: transient failure on attempt %d: %s", self.config.name, attempts, exc)
                    continue
                return CompletionResponse(text, (time.perf_counter() - t0) * 1000.0, attempts)
        raise TransientExhaustedError(attempts, last)

    def _attempt(self, request: CompletionRequest) -> str:
        raise NotImplementedError

    def close(self) -> None:
        pass


class _HTTPProvider(Provider):
    path = ""

    def __init__(self, config: ProviderConfig, sleep=time.sleep,
                 transport: httpx.BaseTransport | None = None):
        super().__init__(config, sleep)
        headers = {"Content-Type": "application/json"}
        key = config.api_key()
        if key:
            headers["Authorization"] = f"Bearer {key}"
        self._client = httpx.Client(timeout=config.timeout, headers=headers, transport=transport)

    def url(self) -> str:
        return self.config.base_url.rstrip("/") + self.path

    def _attempt(self, request: CompletionRequest) -> str:
        try:
            resp = self._client.post(self.url(), json=self.body(request))
        except (httpx.TimeoutException, httpx.TransportError) as exc:
            raise _Transient(str(exc)) from exc
        if resp.status_code == 429 or resp.status_code >= 500:
            raise _Transient(f"HTTP {resp.status_code}")
        if resp.status_code >= 400:
            raise ProviderRejectedError(resp.status_code, resp.text)
        try:
            payload = resp.json()
        except ValueError as exc:
            raise WireFormatError(f"response is not JSON: {resp.text[:200]!r}") from exc
        return self.extract(payload)

    def close(self) -> None:
        self._client.close()


class OpenAIProvider(_HTTPProvider):
    @property
    def path(self) -> str:
        base = self.config.base_url.rstrip("/")
        return "/chat/completions" if base.endswith("/v1") else "/v1/chat/completions"

    def body(self, request: CompletionRequest) -> dict:
        return {
            "model": request.model_id,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        }

    def extract(self, payload: Any) -> str:
        try:
            content = payload["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise WireFormatError(f"no choices[0].message.content in {str(payload)[:200]}") from exc
        if not isinstance(content, str):
            raise WireFormatError(f"message content is {type(content).__name__}, not text")
        return content


class OllamaProvider(_HTTPProvider):
    path = "/api/chat"

    def body(self, request: CompletionRequest) -> dict:
        return {
            "model": request.model_id,
            "messages": [{"role": "user", "content": request.prompt}],
            "options": {"temperature": request.temperature, "num_predict": request.max_tokens},
            "stream": False,
        }

    def extract(self, payload: Any) -> str:
        try:
            content = payload["message"]["content"]
        except (KeyError, TypeError) as exc:
            raise WireFormatError(f"no message.content in {str(payload)[:200]}") from exc
        if not isinstance(content, str):
            raise WireFormatError(f"message content is {type(content).__name__}, not text")
        return content


# ---------------------------------------------------------------- mock ----

WILDCARD = "*"


@dataclass
class MockEntry:
    weights: dict[str, float]
    transient_failures: int = 0
    reject_status: int | None = None

    def __post_init__(self):
        if not self.weights:
            raise ConfigError("mock entry needs at least one weighted output")
        if any(w < 0 or not math.isfinite(w) for w in self.weights.values()):
            raise ConfigError("mock weights must be finite and non-negative")
        if sum(self.weights.values()) <= 0:
            raise ConfigError("mock weights must sum to a positive value")


def _temp_key(t: Any) -> str:
    return WILDCARD if t == WILDCARD else repr(float(t))


def _key(language: Any, upper: Any, temperature: Any) -> tuple[str, str, str]:
    lang = WILDCARD if language == WILDCARD else str(language).upper()
    up = WILDCARD if upper == WILDCARD else str(int(upper))
    return lang, up, _temp_key(temperature)


@dataclass
class MockScript:
    """Seeded categorical answers keyed by (language, upper, temperature).

    Any key component may be ``"*"``; exact matches win over wildcards.
    """

    seed: int
    entries: dict[tuple[str, str, str], MockEntry] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "MockScript":
        entries = {}
        for e in d.get("entries", []):
            key = _key(e.get("language", WILDCARD), e.get("upper", WILDCARD),
                       e.get("temperature", WILDCARD))
            weights = {str(k): float(v) for k, v in e["weights"].items()}
            entries[key] = MockEntry(weights, int(e.get("transient_failures", 0)),
                                     e.get("reject_status"))
        return cls(int(d.get("seed", 0)), entries)

    @classmethod
    def load(cls, path: str | Path) -> "MockScript":
        with open(path, encoding="utf-8") as fh:
            return cls.from_dict(yaml.safe_load(fh))

    @classmethod
    def constant(cls, text: str, seed: int = 0) -> "MockScript":
        return cls(seed, {(WILDCARD,) * 3: MockEntry({text: 1.0})})

    def lookup(self, language: Any, upper: Any, temperature: Any) -> MockEntry:
        lang, up, temp = _key(language, upper, temperature)
        for cand in ((lang, up, temp), (lang, up, WILDCARD), (lang, WILDCARD, temp),
                     (WILDCARD, up, temp), (lang, WILDCARD, WILDCARD), (WILDCARD, up, WILDCARD),
                     (WILDCARD, WILDCARD, temp), (WILDCARD, WILDCARD, WILDCARD)):
            if cand in self.entries:
                return self.entries[cand]
        raise ScriptCoverageError(f"mock script has no entry for {(lang, up, temp)}")


def _unit_draw(seed: int, key: tuple[str, str, str], call_index: int) -> float:
    digest = hashlib.sha256(f"{seed}|{'|'.join(key)}|{call_index}".encode()).digest()
    return int.from_bytes(digest[:8], "big") / 2.0**64


def mock_draw(script: MockScript, key: tuple, call_index: int, seed: int | None = None) -> str:
    """Deterministic categorical draw for one call.

    A pure function of ``(seed, key, call_index)``: the uniform variate is
    taken from a SHA-256 digest, so draws do not depend on call order or on
    how many threads are drawing.
    """
    if call_index < 0:
        raise ValueError("call_index must be non-negative")
    entry = script.lookup(*key)
    seed = script.seed if seed is None else seed
    u = _unit_draw(seed, _key(*key), call_index) * sum(entry.weights.values())
    acc = 0.0
    last = None
    for text, w in entry.weights.items():
        if w <= 0:
            continue
        acc += w
        last = text
        if u < acc:
            return text
    return last


class MockProvider(Provider):
    def __init__(self, config: ProviderConfig, sleep=time.sleep, seed: int | None = None):
        super().__init__(config, sleep)
        script = config.mock_script
        if isinstance(script, MockScript):
            self.script = script
        elif isinstance(script, Mapping):
            self.script = MockScript.from_dict(script)
        else:
            self.script = MockScript.load(script)
        self.seed = self.script.seed if seed is None else seed
        self._lock = threading.Lock()
        self._attempts: dict[tuple, int] = {}

    def _attempt(self, request: CompletionRequest) -> str:
        key = (request.language or WILDCARD, request.upper or WILDCARD, request.temperature)
        entry = self.script.lookup(*key)
        if entry.reject_status:
            raise ProviderRejectedError(int(entry.reject_status), "scripted rejection")
        idx = request.call_index or 0
        with self._lock:
            seen = self._attempts.get((key, idx), 0)
            self._attempts[(key, idx)] = seen + 1
        if seen < entry.transient_failures:
            raise _Transient(f"scripted failure {seen + 1}/{entry.transient_failures}")
        return mock_draw(self.script, key, idx, self.seed)


def make_provider(config: ProviderConfig, *, sleep=time.sleep, transport=None,
                  seed: int | None = None) -> Provider:
    if config.kind == "mock":
        return MockProvider(config, sleep, seed=seed)
    if config.kind == "openai-compatible":
        return OpenAIProvider(config, sleep, transport)
    return OllamaProvider(config, sleep, transport)


def complete(config: ProviderConfig, request: CompletionRequest, **kwargs) -> CompletionResponse:
    """One-shot call; long runs should keep a :class:`Gateway` instead."""
    provider = make_provider(config, **kwargs)
    try:
        return provider.complete(request)
    finally:
        provider.close()


class Gateway:
    """Lazily built providers keyed by name."""

    def __init__(self, configs: Mapping[str, ProviderConfig], *, sleep=time.sleep,
                 transport=None, seed: int | None = None):
        self.configs = dict(configs)
        self._kw = dict(sleep=sleep, transport=transport, seed=seed)
        self._providers: dict[str, Provider] = {}
        self._lock = threading.Lock()

    def provider(self, name: str) -> Provider:
        with self._lock:
            if name not in self._providers:
                try:
                    cfg = self.configs[name]
                except KeyError:
                    raise ConfigError(f"unknown provider {name!r}") from None
                self._providers[name] = make_provider(cfg, **self._kw)
            return self._providers[name]

    def complete(self, name: str, request: CompletionRequest) -> CompletionResponse:
        return self.provider(name).complete(request)

    def close(self) -> None:
        for p in self._providers.values():
            p.close()
        self._providers.clear()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
