"""Deterministic scripted backend for tests and offline replays.

A manifest is an ordered list of canned responses, split by phase: plan
requests consume plan entries in order, code requests consume code entries
in order.  An entry may pin a ``match`` substring the incoming prompt must
contain — a cheap tripwire for prompt regressions in replay tests.
"""

from __future__ import annotations

import json
import threading
from dataclasses import dataclass, field
from pathlib import Path

from .base import Completion, CompletionError

_PHASES = ("plan", "code")


@dataclass(frozen=True)
class ScriptEntry:
    phase: str
    response: str
    match: str | None = None

    def __post_init__(self):
        if self.phase not in _PHASES:
            raise ValueError(f"phase must be one of {_PHASES}, "
                             f"got {self.phase!r}")


@dataclass
class ScriptManifest:
    """Ordered canned responses with one consumption cursor per phase."""

    entries: list[ScriptEntry] = field(default_factory=list)

    @classmethod
    def from_json(cls, data: list | dict, base_dir: Path | None = None
                  ) -> "ScriptManifest":
        """Build from parsed JSON: a list of entry objects, each with
        ``phase``, optional ``match``, and either inline ``response`` text
        or a ``response_file`` path (relative to ``base_dir``)."""
        if isinstance(data, dict):
            data = data["entries"]
        entries = []
        for i, e in enumerate(data):
            if "response" in e:
                text = e["response"]
            elif "response_file" in e:
                p = Path(e["response_file"])
                if base_dir is not None and not p.is_absolute():
                    p = base_dir / p
                text = p.read_text()
            else:
                raise ValueError(f"manifest entry {i} has neither 'response' "
                                 "nor 'response_file'")
            entries.append(ScriptEntry(phase=e["phase"], response=text,
                                       match=e.get("match")))
        return cls(entries)

    @classmethod
    def load(cls, path: str | Path) -> "ScriptManifest":
        path = Path(path)
        return cls.from_json(json.loads(path.read_text()), path.parent)


class ScriptedBackend:
    """Serves manifest entries in order; exhaustion or a failed ``match``
    pin is an error (a broken script is a test bug, not a lost sample)."""

    def __init__(self, manifest: ScriptManifest):
        self._lock = threading.Lock()
        self._queues = {p: [e for e in manifest.entries if e.phase == p]
                        for p in _PHASES}
        self._cursors = {p: 0 for p in _PHASES}

    def complete(self, prompt: str, phase: str) -> Completion:
        if phase not in _PHASES:
            raise ValueError(f"phase must be one of {_PHASES}, got {phase!r}")
        with self._lock:
            queue = self._queues[phase]
            i = self._cursors[phase]
            if i >= len(queue):
                raise CompletionError(
                    f"script exhausted: no {phase} entries left "
                    f"(served {i})")
            entry = queue[i]
            self._cursors[phase] = i + 1
        if entry.match is not None and entry.match not in prompt:
            raise CompletionError(
                f"script mismatch: {phase} entry {i} expects the prompt to "
                f"contain {entry.match!r}")
        return Completion(text=entry.response, model="script")
