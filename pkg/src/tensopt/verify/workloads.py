"""Workload descriptions, random input generation, and the naive GEMM kernel.

A workload names the computation a kernel claims to implement, which
parameters are inputs versus outputs, and how large everything is.  The
equivalence harness uses it to draw random inputs and pick the right
reference oracle; the CLI uses it to build start kernels.

Input distributions are fixed so tolerance analysis holds: int8 inputs are
uniform over [-128, 127], float32 inputs uniform over [-1, 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

_KINDS = ("gemm", "conv", "tinympc_fwd")

NSTATES = 12
NINPUTS = 4


@dataclass(frozen=True)
class WorkloadSpec:
    """What a kernel computes: kind, sizes, types, and parameter roles."""

    kind: str
    dims: dict[str, int]
    elem_type: str = "int8"
    acc_type: str = "int32"
    inputs: tuple[str, ...] = ()
    outputs: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"kind must be one of {_KINDS}, got {self.kind!r}")
        for name, v in self.dims.items():
            if not isinstance(v, int) or v < 1:
                raise ValueError(f"dimension {name} must be a positive int, got {v!r}")
        if not self.outputs:
            raise ValueError("a workload needs at least one output parameter")

    @property
    def is_float(self) -> bool:
        return self.elem_type == "float32"

    def fingerprint(self) -> dict:
        """Stable identity used when judging schedule-reuse similarity."""
        return {"kind": self.kind, "dims": dict(sorted(self.dims.items())),
                "elem_type": self.elem_type, "acc_type": self.acc_type}


def gemm_spec(m: int, k: int, n: int, elem_type: str = "int8",
              acc_type: str = "int32") -> WorkloadSpec:
    """C[M][N] = A[M][K] * B[K][N]."""
    return WorkloadSpec(
        kind="gemm", dims={"M": m, "K": k, "N": n},
        elem_type=elem_type, acc_type=acc_type,
        inputs=("A", "B"), outputs=("C",),
    )


def conv_spec(batch: int, in_ch: int, out_ch: int, spatial: int, kernel: int,
              stride: int = 1, elem_type: str = "int8",
              acc_type: str = "int32") -> WorkloadSpec:
    """Direct NHWC convolution, no padding."""
    if spatial < kernel:
        raise ValueError("spatial extent smaller than the kernel")
    if (spatial - kernel) % stride:
        raise ValueError("kernel/stride do not tile the spatial extent")
    return WorkloadSpec(
        kind="conv",
        dims={"batch": batch, "in_ch": in_ch, "out_ch": out_ch,
              "spatial": spatial, "kernel": kernel, "stride": stride},
        elem_type=elem_type, acc_type=acc_type,
        inputs=("input", "weights"), outputs=("output",),
    )


def tinympc_spec(nhorizon: int = 5) -> WorkloadSpec:
    """Forward rollout of the LQR feedback law over a fixed horizon.

    ``x`` is both input and scratch: row 0 carries the initial state, later
    rows are produced by the kernel.  Only ``u`` is checked for equivalence;
    optimized kernels are free to keep intermediate states on the
    accelerator.
    """
    return WorkloadSpec(
        kind="tinympc_fwd", dims={"NHORIZON": nhorizon},
        elem_type="float32", acc_type="float32",
        inputs=("Adyn", "Bdyn", "Kinf", "x", "d"), outputs=("u",),
    )


def param_shapes(spec: WorkloadSpec) -> dict[str, tuple[int, ...]]:
    """Declared shapes of the standard kernel parameters for this workload."""
    d = spec.dims
    if spec.kind == "gemm":
        return {"A": (d["M"], d["K"]), "B": (d["K"], d["N"]),
                "C": (d["M"], d["N"])}
    if spec.kind == "conv":
        out_sp = (d["spatial"] - d["kernel"]) // d["stride"] + 1
        return {
            "input": (d["batch"], d["spatial"], d["spatial"], d["in_ch"]),
            "weights": (d["kernel"], d["kernel"], d["in_ch"], d["out_ch"]),
            "output": (d["batch"], out_sp, out_sp, d["out_ch"]),
        }
    nh = d["NHORIZON"]
    return {
        "Adyn": (NSTATES, NSTATES), "Bdyn": (NSTATES, NINPUTS),
        "Kinf": (NINPUTS, NSTATES), "x": (nh + 1, NSTATES, 1),
        "d": (nh, NINPUTS, 1), "u": (nh, NINPUTS, 1),
    }


def generate_inputs(spec: WorkloadSpec, rng: np.random.Generator) -> dict:
    """Draw one random input set; output parameters are zero-filled.

    For tinympc, only the initial state row of ``x`` is random — the rest is
    left zero for the kernel to fill — and the gain/dynamics matrices are
    drawn uniform then scaled by 1/NSTATES.  Unscaled uniform matrices make
    the rollout exponentially unstable, which amplifies benign float32
    ordering differences past any fixed tolerance; scaling keeps every
    trajectory O(1) so the tolerance analysis holds at all horizons.
    """
    dtype = np.float32 if spec.is_float else np.int8
    scaled = ("Adyn", "Bdyn", "Kinf")

    def draw(shape, scale=1.0):
        if spec.is_float:
            v = rng.uniform(-1.0, 1.0, size=shape).astype(np.float32)
            return v * np.float32(scale) if scale != 1.0 else v
        return rng.integers(-128, 128, size=shape, dtype=np.int8)

    out = {}
    for name, shape in param_shapes(spec).items():
        if name == "x":
            x = np.zeros(shape, dtype=dtype)
            x[0] = draw(shape[1:])
            out[name] = x
        elif name in spec.inputs:
            out[name] = draw(shape, 1.0 / NSTATES if name in scaled else 1.0)
        else:
            out[name] = np.zeros(shape, dtype=dtype)
    return out


def gemm_template(m: int, k: int, n: int, dim: int = 16,
                  elem: str = "int8_t") -> str:
    """Source of the naive tile-at-a-time GEMM kernel.

    One accumulator tile, no reuse, no overlap: every (i, j) output tile
    zero-fills the accumulator, then streams A and B tiles one k-step at a
    time through a single scratchpad slot each.  This is the unoptimized
    starting point for searches and the kernel form used for oracle
    cross-checking.  All three dims must be multiples of the array size.
    """
    for name, v in (("M", m), ("K", k), ("N", n)):
        if v < dim or v % dim:
            raise ValueError(f"{name}={v} is not a positive multiple of {dim}")
    esize = 4 if elem == "float" else 1  # DMA strides are in bytes
    mt, kt, nt = m // dim, k // dim, n // dim
    return f"""\
void test({elem} A[{m}][{k}], {elem} B[{k}][{n}], {elem} C[{m}][{n}]) {{
  config_ex(WEIGHT_STATIONARY, NO_ACTIVATION, 1, false, false);
  config_st({n * esize});
  config_ld(0, 1.0f, 0, 0);
  config_ld({k * esize}, 1.0f, 0, 1);
  config_ld({n * esize}, 1.0f, 0, 2);

  uint32_t A_sp = 0;
  uint32_t B_sp = {dim};
  uint32_t C_acc = 1 << 31;

  for (int_fast32_t i = 0; i < {mt}; i++) {{
    for (int_fast32_t j = 0; j < {nt}; j++) {{
      mvin(0, C_acc, {dim}, {dim});
      for (int_fast32_t k = 0; k < {kt}; k++) {{
        mvin2(&A[{dim} * i][{dim} * k], A_sp, {dim}, {dim});
        mvin3(&B[{dim} * k][{dim} * j], B_sp, {dim}, {dim});
        preload(B_sp, C_acc | (1 << 30), {dim}, {dim}, {dim}, {dim});
        compute_preloaded(A_sp, ~((uint32_t)0), {dim}, {dim}, {dim}, {dim});
      }}
      mvout(&C[{dim} * i][{dim} * j], C_acc, {dim}, {dim});
    }}
  }}
  fence();
}}
"""


def start_kernel(spec: WorkloadSpec, dim: int = 16) -> str:
    """Unoptimized kernel source for a workload, as a search starting point."""
    if spec.kind == "gemm":
        elem = "float" if spec.is_float else "int8_t"
        d = spec.dims
        return gemm_template(d["M"], d["K"], d["N"], dim=dim, elem=elem)
    if spec.kind == "tinympc_fwd":
        from importlib import resources

        text = (resources.files("tensopt.assets") / "kernels"
                / "tinympc_fwd_unopt.gk").read_text()
        nh = spec.dims["NHORIZON"]
        if nh != 5:
            raise ValueError("the bundled rollout kernel is written for a "
                             "horizon of 5")
        return text
    raise ValueError(f"no start kernel template for workload {spec.kind!r}")
