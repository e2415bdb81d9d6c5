"""Search trace: one JSON line per event, written in canonical order.

Records carry no timestamps and are serialized with sorted keys, so a
seeded run with a scripted backend produces a byte-identical file every
time.  The record kinds are: plan_request, plan_response, code_request,
code_response, verdict, beam.
"""

from __future__ import annotations

import json
from pathlib import Path

KINDS = ("plan_request", "plan_response", "code_request", "code_response",
         "verdict", "beam")


class TraceWriter:
    """Collects trace records in memory and optionally streams them to a
    file as JSON lines."""

    def __init__(self, path: str | Path | None = None):
        self.records: list[dict] = []
        self._fh = open(path, "w") if path is not None else None

    def write(self, kind: str, iteration: int, ids: dict,
              payload: dict) -> None:
        if kind not in KINDS:
            raise ValueError(f"unknown trace record kind {kind!r}")
        rec = {"kind": kind, "iteration": iteration, "ids": ids,
               "payload": payload}
        self.records.append(rec)
        if self._fh is not None:
            json.dump(rec, self._fh, sort_keys=True,
                      separators=(",", ":"))
            self._fh.write("\n")
            self._fh.flush()

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None

    def __enter__(self) -> "TraceWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()


def read_trace(path: str | Path) -> list[dict]:
    """Parse a trace file; malformed lines raise ValueError."""
    records = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as err:
                raise ValueError(f"trace line {lineno} is not valid JSON: "
                                 f"{err}") from err
            if not isinstance(rec, dict) or "kind" not in rec \
                    or "iteration" not in rec:
                raise ValueError(f"trace line {lineno} is not a trace record")
            records.append(rec)
    return records
