"""OpenAI-compatible chat-completions client over httpx.

Single-turn requests only: every sample is one independent user message,
no system prompt, no conversation memory.  Transient failures (transport
errors, timeouts, 429, 5xx) are retried with exponential backoff up to the
model's retry budget; anything that still fails surfaces as a
CompletionError for the search layer to count as a lost sample.
"""

from __future__ import annotations

import threading
import time

import httpx

from .base import DEFAULT_IN_FLIGHT, Completion, CompletionError, ModelSpec

_RETRYABLE_STATUS = frozenset({408, 409, 429, 500, 502, 503, 504})


def _url(endpoint: str) -> str:
    base = endpoint.rstrip("/")
    if base.endswith("/chat/completions"):
        return base
    return base + "/chat/completions"


class OpenAIBackend:
    """One model behind an OpenAI-style /chat/completions endpoint.

    ``max_in_flight`` bounds concurrent requests through this backend; a
    custom ``transport`` can be injected for tests (httpx.MockTransport).
    """

    def __init__(self, spec: ModelSpec, max_in_flight: int = DEFAULT_IN_FLIGHT,
                 transport: httpx.BaseTransport | None = None):
        if max_in_flight < 1:
            raise ValueError("max_in_flight must be at least 1")
        self.spec = spec
        self._gate = threading.Semaphore(max_in_flight)
        self._client = httpx.Client(timeout=spec.timeout, transport=transport)
        self._sleep = time.sleep  # patched in tests

    def close(self) -> None:
        self._client.close()

    def complete(self, prompt: str, phase: str = "") -> Completion:
        spec = self.spec
        payload = {
            "model": spec.model,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": spec.temperature,
            "max_tokens": spec.max_tokens,
        }
        headers = {}
        key = spec.api_key()
        if key:
            headers["Authorization"] = f"Bearer {key}"

        last_err = "no attempt made"
        for attempt in range(spec.max_retries + 1):
            if attempt:
                self._sleep(spec.backoff * 2 ** (attempt - 1))
            try:
                with self._gate:
                    resp = self._client.post(_url(spec.endpoint),
                                             json=payload, headers=headers)
            except httpx.HTTPError as err:
                last_err = f"transport error: {err}"
                continue
            if resp.status_code in _RETRYABLE_STATUS:
                last_err = f"HTTP {resp.status_code}"
                continue
            if resp.status_code != 200:
                raise CompletionError(
                    f"{spec.model}: HTTP {resp.status_code}: "
                    f"{resp.text[:200]}")
            return self._parse(resp)
        raise CompletionError(
            f"{spec.model}: giving up after {spec.max_retries + 1} attempts "
            f"({last_err})")

    def _parse(self, resp: httpx.Response) -> Completion:
        spec = self.spec
        try:
            body = resp.json()
            text = body["choices"][0]["message"]["content"]
        except (ValueError, LookupError, TypeError) as err:
            raise CompletionError(
                f"{spec.model}: malformed response body: {err}") from err
        if not text:
            raise CompletionError(f"{spec.model}: empty response")
        usage = body.get("usage") or {}
        return Completion(
            text=text, model=body.get("model", spec.model),
            prompt_tokens=usage.get("prompt_tokens"),
            completion_tokens=usage.get("completion_tokens"))
