"""Minimal provider-agnostic LLM client.

Wire contract: ``POST endpoint {"prompt": str}`` answered by ``{"text": str}``,
authenticated with ``Authorization: Bearer <key>`` where the key is read from
the environment variable named in the config. Real providers are adapted onto
this contract outside the package.
"""

from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable, TypeVar

import httpx

from .domain import MlarError

log = logging.getLogger(__name__)

T = TypeVar("T")

BACKOFF_CAP = 4.0


class Provider(str, Enum):
    REMOTE = "Remote"
    RULES = "Rules"


@dataclass(frozen=True)
class ExtractorConfig:
    provider: Provider = Provider.RULES
    endpoint_url: str | None = None
    api_key_env_var: str = "MLAR_LLM_API_KEY"
    max_retries: int = 2
    timeout: float = 30.0
    max_concurrent_requests: int = 4

    def __post_init__(self) -> None:
        if self.provider is Provider.REMOTE and not (self.endpoint_url and self.api_key_env_var):
            raise ValueError("Remote extractor requires endpoint_url and api_key_env_var")
        if self.max_retries < 0 or self.max_concurrent_requests < 1 or self.timeout <= 0:
            raise ValueError("invalid extractor limits")

    def to_dict(self) -> dict[str, Any]:
        return {
            "provider": self.provider.value,
            "endpoint_url": self.endpoint_url,
            "api_key_env_var": self.api_key_env_var,
            "max_retries": self.max_retries,
            "timeout": self.timeout,
            "max_concurrent_requests": self.max_concurrent_requests,
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ExtractorConfig":
        return cls(
            provider=Provider(d.get("provider", "Rules")),
            endpoint_url=d.get("endpoint_url"),
            api_key_env_var=d.get("api_key_env_var", "MLAR_LLM_API_KEY"),
            max_retries=int(d.get("max_retries", 2)),
            timeout=float(d.get("timeout", 30.0)),
            max_concurrent_requests=int(d.get("max_concurrent_requests", 4)),
        )


class LLMError(MlarError):
    def __init__(self, message: str, attempts: int = 0, last_output: str | None = None):
        super().__init__(message)
        self.attempts = attempts
        self.last_output = last_output


class UnrepairableOutput(MlarError, ValueError):
    def __init__(self, text: str):
        super().__init__(f"unrepairable output: {text[:80]!r}")
        self.text = text


def repair_json(text: str) -> dict[str, Any]:
    """First top-level JSON object in ``text``, ignoring surrounding noise such as code fences."""
    decoder = json.JSONDecoder()
    start = text.find("{")
    while start != -1:
        try:
            obj, _ = decoder.raw_decode(text, start)
        except json.JSONDecodeError:
            start = text.find("{", start + 1)
            continue
        if isinstance(obj, dict):
            return obj
        start = text.find("{", start + 1)
    raise UnrepairableOutput(text)


def backoff_delay(attempt: int) -> float:
    """Delay after failed attempt ``attempt`` (0-based): 1, 2, 4, 4, ... seconds."""
    return min(2.0**attempt, BACKOFF_CAP)


class RemoteClient:
    """Thread-safe; one instance can serve every worker of a pass."""

    def __init__(
        self,
        config: ExtractorConfig,
        *,
        sleep: Callable[[float], None] = time.sleep,
        transport: httpx.BaseTransport | None = None,
    ):
        if config.provider is not Provider.REMOTE:
            raise ValueError("RemoteClient needs a Remote extractor config")
        self.config = config
        self.sleep = sleep
        self._http = httpx.Client(timeout=config.timeout, transport=transport)
        self.requests_made = 0

    def close(self) -> None:
        self._http.close()

    def __enter__(self) -> "RemoteClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _headers(self) -> dict[str, str]:
        key = os.environ.get(self.config.api_key_env_var)
        if not key:
            raise LLMError(f"environment variable {self.config.api_key_env_var} is not set")
        return {"Authorization": f"Bearer {key}"}

    def complete(self, prompt: str, parse: Callable[[str], T]) -> T:
        """POST ``prompt`` and return ``parse(text)``.

        Transport errors, timeouts, 5xx responses and output that ``parse``
        rejects with ``ValueError`` are retried up to ``max_retries`` times;
        4xx responses fail immediately.
        """
        headers = self._headers()
        attempts = self.config.max_retries + 1
        last_output: str | None = None
        reason = ""
        for attempt in range(attempts):
            if attempt:
                self.sleep(backoff_delay(attempt - 1))
            self.requests_made += 1
            try:
                resp = self._http.post(self.config.endpoint_url, json={"prompt": prompt}, headers=headers)
            except httpx.TransportError as exc:
                reason = f"transport error: {exc!r}"
                log.warning("LLM request failed (attempt %d/%d): %s", attempt + 1, attempts, reason)
                continue
            if 400 <= resp.status_code < 500:
                raise LLMError(f"HTTP {resp.status_code}: {resp.text[:200]}", attempt + 1)
            if resp.status_code >= 500:
                reason = f"HTTP {resp.status_code}"
                log.warning("LLM request failed (attempt %d/%d): %s", attempt + 1, attempts, reason)
                continue
            try:
                last_output = resp.json()["text"]
                return parse(last_output)
            except (ValueError, KeyError, TypeError) as exc:
                reason = f"invalid output: {exc}"
                log.warning("LLM output rejected (attempt %d/%d): %s", attempt + 1, attempts, reason)
        raise LLMError(f"retries exhausted after {attempts} attempts; last failure: {reason}", attempts, last_output)
