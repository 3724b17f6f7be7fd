"""HTTP client for a local chat-completion model server (Ollama wire format).

POST ``{base_url}/api/chat`` with ``{"model", "messages", "stream": false,
"options": {...}}``; the reply text is ``response["message"]["content"]``.
"""

from __future__ import annotations

import logging
import os
import threading
import time
from typing import Any, Callable, Mapping, Sequence

import httpx

from nomiclaw.protocol import AgentError

logger = logging.getLogger(__name__)

DEFAULT_URL = "http://localhost:11434"
DEFAULT_PARAMS: dict[str, Any] = {"temperature": 0.7}


class BackendError(AgentError):
    """The model server could not be reached or kept failing."""


def backend_url(explicit: str | None = None) -> str:
    return (explicit or os.environ.get("NOMIC_BACKEND_URL") or DEFAULT_URL).rstrip("/")


class RateLimiter:
    """Thread-safe pacing: at most ``rate`` acquisitions per second.

    The bucket starts empty, so ``n`` acquisitions span at least ``n / rate``
    seconds of (possibly simulated) time.
    """

    def __init__(
        self,
        rate: float,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        if rate <= 0:
            raise ValueError("rate must be positive")
        self.interval = 1.0 / rate
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()
        self._origin = 0.0
        self._count = 0
        self._next: float | None = None

    def acquire(self) -> None:
        with self._lock:
            now = self._clock()
            if self._next is None or now > self._next:
                # idle (or first use): schedule from now
                self._origin, self._count = now, 0
            self._count += 1
            # multiply rather than accumulate so long runs do not drift
            slot = self._origin + self._count * self.interval
            self._next = slot
        wait = slot - self._clock()
        if wait > 0:
            self._sleep(wait)


_limiters: dict[str, RateLimiter] = {}
_limiters_lock = threading.Lock()


def shared_limiter(endpoint: str, rate: float) -> RateLimiter:
    """One limiter per endpoint, shared by every client in the process."""
    with _limiters_lock:
        lim = _limiters.get(endpoint)
        if lim is None or abs(lim.interval - 1.0 / rate) > 1e-12:
            lim = _limiters[endpoint] = RateLimiter(rate)
        return lim


class BackendClient:
    def __init__(
        self,
        base_url: str | None = None,
        *,
        timeout: float = 120.0,
        retries: int = 3,
        backoff: float = 1.0,
        rate_limit: float | None = None,
        transport: httpx.BaseTransport | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ) -> None:
        self.base_url = backend_url(base_url)
        self.retries = retries
        self.backoff = backoff
        self._sleep = sleep
        self._limiter = shared_limiter(self.base_url, rate_limit) if rate_limit else None
        self._http = httpx.Client(base_url=self.base_url, timeout=timeout, transport=transport)

    def close(self) -> None:
        self._http.close()

    def __enter__(self) -> "BackendClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def complete(
        self,
        model_id: str,
        messages: Sequence[Mapping[str, str]],
        params: Mapping[str, Any] | None = None,
    ) -> str:
        payload = {
            "model": model_id,
            "messages": [dict(m) for m in messages],
            "stream": False,
            "options": {**DEFAULT_PARAMS, **(params or {})},
        }
        attempts = self.retries + 1
        last = ""
        for attempt in range(attempts):
            if attempt:
                self._sleep(self.backoff * 2 ** (attempt - 1))
            if self._limiter:
                self._limiter.acquire()
            try:
                resp = self._http.post("/api/chat", json=payload)
            except httpx.TransportError as exc:
                last = f"transport error: {exc}"
                logger.debug("%s %s (attempt %d)", model_id, last, attempt + 1)
                continue
            if resp.status_code >= 300:
                last = f"HTTP {resp.status_code}"
                logger.debug("%s %s (attempt %d)", model_id, last, attempt + 1)
                continue
            try:
                return resp.json()["message"]["content"]
            except (ValueError, KeyError, TypeError):
                last = "malformed response body"
        raise BackendError(f"{model_id} at {self.base_url}: {last} after {attempts} attempts")


def backend_complete(
    endpoint: str | None,
    model_id: str,
    messages: Sequence[Mapping[str, str]],
    params: Mapping[str, Any] | None = None,
    **client_kwargs,
) -> str:
    with BackendClient(endpoint, **client_kwargs) as client:
        return client.complete(model_id, messages, params)
