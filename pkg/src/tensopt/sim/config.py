"""Accelerator instance and timing-model parameters."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_ELEM_DTYPES = {"int8": np.int8, "float32": np.float32}
_ACC_DTYPES = {"int32": np.int32, "float32": np.float32}

# Supported (elem, acc) pairings: integer inputs accumulate in int32,
# float inputs accumulate in float32.
_LANES = {("int8", "int32"), ("float32", "float32")}


@dataclass(frozen=True)
class TimingParams:
    """Knobs of the cycle-approximate model.

    All costs are in cycles.  ``compute_fill`` defaults to the array
    dimension when left as None.
    """

    cpu_node_cost: int = 1
    issue_cost: int = 2
    config_cost: int = 2
    dma_startup: int = 20
    bus_bytes_per_cycle: int = 16
    compute_fill: int | None = None
    queue_depth: int = 16
    fence_drain_overhead: int = 10

    def __post_init__(self):
        for name in ("cpu_node_cost", "issue_cost", "config_cost", "dma_startup",
                     "bus_bytes_per_cycle", "queue_depth", "fence_drain_overhead"):
            v = getattr(self, name)
            if not isinstance(v, int) or v < 0:
                raise ValueError(f"{name} must be a non-negative integer, got {v!r}")
        if self.bus_bytes_per_cycle < 1:
            raise ValueError("bus_bytes_per_cycle must be >= 1")
        if self.queue_depth < 1:
            raise ValueError("queue_depth must be >= 1")
        if self.compute_fill is not None and self.compute_fill < 0:
            raise ValueError("compute_fill must be >= 0")


@dataclass(frozen=True)
class AcceleratorConfig:
    """One accelerator instance: array size, data types, memory capacities."""

    dim: int = 16
    elem_type: str = "int8"
    acc_type: str = "int32"
    spad_kb: int = 256
    acc_kb: int = 64
    timing: TimingParams = field(default_factory=TimingParams)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.elem_type not in _ELEM_DTYPES:
            raise ValueError(f"elem_type must be one of {sorted(_ELEM_DTYPES)}")
        if self.acc_type not in _ACC_DTYPES:
            raise ValueError(f"acc_type must be one of {sorted(_ACC_DTYPES)}")
        if (self.elem_type, self.acc_type) not in _LANES:
            raise ValueError(
                f"unsupported type pairing ({self.elem_type}, {self.acc_type}); "
                f"supported: {sorted(_LANES)}"
            )
        if self.spad_kb * 1024 % (self.dim * self.elem_bytes):
            raise ValueError("scratchpad capacity must be a whole number of rows")
        if self.acc_kb * 1024 % (self.dim * self.acc_bytes):
            raise ValueError("accumulator capacity must be a whole number of rows")

    @property
    def elem_dtype(self) -> np.dtype:
        return np.dtype(_ELEM_DTYPES[self.elem_type])

    @property
    def acc_dtype(self) -> np.dtype:
        return np.dtype(_ACC_DTYPES[self.acc_type])

    @property
    def elem_bytes(self) -> int:
        return int(np.dtype(_ELEM_DTYPES[self.elem_type]).itemsize)

    @property
    def acc_bytes(self) -> int:
        return int(np.dtype(_ACC_DTYPES[self.acc_type]).itemsize)

    @property
    def spad_rows(self) -> int:
        return self.spad_kb * 1024 // (self.dim * self.elem_bytes)

    @property
    def acc_rows(self) -> int:
        return self.acc_kb * 1024 // (self.dim * self.acc_bytes)

    @property
    def compute_fill(self) -> int:
        fill = self.timing.compute_fill
        return self.dim if fill is None else fill

    @property
    def is_float(self) -> bool:
        return self.elem_type == "float32"

    def summary(self) -> str:
        """One-line description used as prompt context."""
        return (
            f"The target accelerator has a {self.dim}x{self.dim} systolic array "
            f"(DIM = {self.dim}), a {self.spad_kb} KB scratchpad "
            f"({self.spad_rows} rows of {self.dim} {self.elem_type} elements), and a "
            f"{self.acc_kb} KB accumulator ({self.acc_rows} rows of {self.dim} "
            f"{self.acc_type} elements)."
        )


def instance_a() -> AcceleratorConfig:
    """16x16 int8/int32 instance."""
    return AcceleratorConfig(dim=16, elem_type="int8", acc_type="int32",
                       spad_kb=256, acc_kb=64)


def instance_b() -> AcceleratorConfig:
    """4x4 float32/float32 instance."""
    return AcceleratorConfig(dim=4, elem_type="float32", acc_type="float32",
                       spad_kb=256, acc_kb=64)
