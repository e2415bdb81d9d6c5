"""Performance reporting: counter vectors -> PerfReport / MachineTrace / text.

The feedback line format is part of the optimization loop's contract with the
language models; change it only together with the prompt templates.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import counters as ct
from ..dsl.intrinsics import INTRINSICS
from .config import AcceleratorConfig

# Executable intrinsics occupy the low ids, in table order.
KIND_NAMES = tuple(name for name, sig in INTRINSICS.items() if sig.executable)

CONTROLLERS = ("load", "ex", "store")


@dataclass(frozen=True)
class MachineTrace:
    """Functional execution summary (no timing), plus events when recorded."""

    instr_counts: dict[str, int]
    dram_bytes_in: int
    dram_bytes_out: int
    macs: int
    spad_rows_written: int
    acc_rows_written: int
    nodes_evaluated: int
    events: tuple = ()


@dataclass(frozen=True)
class PerfReport:
    total_cycles: int
    cpu_cycles: int
    spad_util_kb: float
    acc_util_kb: float
    dram_bytes_in: int
    dram_bytes_out: int
    instr_counts: dict[str, int]
    busy_cycles: dict[str, int]
    stall_cycles: dict[str, int]
    macs: int
    utilization_pct: float = field(default=0.0)

    def to_json(self) -> dict:
        return {
            "total_cycles": self.total_cycles,
            "cpu_cycles": self.cpu_cycles,
            "spad_util_kb": self.spad_util_kb,
            "acc_util_kb": self.acc_util_kb,
            "dram_bytes_in": self.dram_bytes_in,
            "dram_bytes_out": self.dram_bytes_out,
            "instr_counts": dict(self.instr_counts),
            "busy_cycles": dict(self.busy_cycles),
            "stall_cycles": dict(self.stall_cycles),
            "macs": self.macs,
            "utilization_pct": self.utilization_pct,
        }


def _instr_counts(counters: np.ndarray) -> dict[str, int]:
    return {KIND_NAMES[i]: int(counters[ct.KIND_BASE + i])
            for i in range(ct.N_KINDS) if counters[ct.KIND_BASE + i]}


def trace_from_counters(counters: np.ndarray, events=()) -> MachineTrace:
    return MachineTrace(
        instr_counts=_instr_counts(counters),
        dram_bytes_in=int(counters[ct.DMA_BYTES_IN]),
        dram_bytes_out=int(counters[ct.DMA_BYTES_OUT]),
        macs=int(counters[ct.MACS]),
        spad_rows_written=int(counters[ct.SPAD_ROWS]),
        acc_rows_written=int(counters[ct.ACC_ROWS]),
        nodes_evaluated=int(counters[ct.NODE_COUNT]),
        events=tuple(events),
    )


def report_from_counters(counters: np.ndarray,
                         cfg: AcceleratorConfig) -> PerfReport:
    total = int(counters[ct.TOTAL_CYCLES])
    macs = int(counters[ct.MACS])
    peak = cfg.dim * cfg.dim * total
    return PerfReport(
        total_cycles=total,
        cpu_cycles=int(counters[ct.CPU_CYCLES]),
        spad_util_kb=int(counters[ct.SPAD_ROWS]) * cfg.dim * cfg.elem_bytes / 1024,
        acc_util_kb=int(counters[ct.ACC_ROWS]) * cfg.dim * cfg.acc_bytes / 1024,
        dram_bytes_in=int(counters[ct.DMA_BYTES_IN]),
        dram_bytes_out=int(counters[ct.DMA_BYTES_OUT]),
        instr_counts=_instr_counts(counters),
        busy_cycles={"load": int(counters[ct.LOAD_BUSY]),
                     "ex": int(counters[ct.EXEC_BUSY]),
                     "store": int(counters[ct.STORE_BUSY])},
        stall_cycles={"load": int(counters[ct.LOAD_STALL]),
                      "ex": int(counters[ct.EXEC_STALL]),
                      "store": int(counters[ct.STORE_STALL])},
        macs=macs,
        utilization_pct=(100.0 * macs / peak) if peak else 0.0,
    )


def compute_feedback(r: PerfReport, cfg: AcceleratorConfig) -> str:
    """Render the performance feedback line fed back to the models."""
    return (f"Latency: {r.total_cycles} cycles. "
            f"Scratchpad utilization: {r.spad_util_kb:.1f} KB / {cfg.spad_kb} KB. "
            f"Accumulator utilization: {r.acc_util_kb:.1f} KB / {cfg.acc_kb} KB.")
