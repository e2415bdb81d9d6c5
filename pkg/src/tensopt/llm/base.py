"""Shared backend types: model descriptions, completions, and assignment.

A backend is anything with ``complete(prompt, phase) -> Completion``.  The
``phase`` ("plan" or "code") exists for the scripted backend, which keeps
an independent cursor per phase; live HTTP backends ignore it.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Protocol, runtime_checkable

DEFAULT_KEY_ENV = "TENSOPT_API_KEY"
DEFAULT_IN_FLIGHT = 8


class CompletionError(Exception):
    """A sample-level failure: timeout, exhausted retries, empty response.

    The search layer treats these as lost samples, never as fatal errors.
    """


@dataclass(frozen=True)
class ModelSpec:
    """How to reach one model: endpoint, sampling knobs, retry policy.

    API keys are read from the environment only — ``api_key_env`` names the
    variable (falling back to TENSOPT_API_KEY), and config files never hold
    secrets.
    """

    endpoint: str
    model: str
    temperature: float = 1.0
    max_tokens: int = 4096
    timeout: float = 120.0
    max_retries: int = 2
    backoff: float = 1.0
    api_key_env: str = DEFAULT_KEY_ENV

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be at least 1")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be non-negative")
        if self.backoff < 0:
            raise ValueError("backoff must be non-negative")

    def api_key(self) -> str | None:
        return os.environ.get(self.api_key_env) or os.environ.get(
            DEFAULT_KEY_ENV)


@dataclass(frozen=True)
class Completion:
    """One model response plus whatever token accounting the provider gave."""

    text: str
    model: str = ""
    prompt_tokens: int | None = None
    completion_tokens: int | None = None


@runtime_checkable
class Backend(Protocol):
    def complete(self, prompt: str, phase: str) -> Completion: ...


def ensemble_assign(n_samples: int, n_models: int) -> list[int]:
    """Round-robin model index per sample; counts differ by at most one."""
    if n_samples < 1:
        raise ValueError("need at least one sample")
    if n_models < 1:
        raise ValueError("need at least one model")
    return [i % n_models for i in range(n_samples)]
