"""Reference implementations the accelerator kernels are checked against.

Each oracle recomputes the workload with plain numpy, following the exact
arithmetic the machine model uses so integer results can be compared bit
for bit:

* int8 inputs accumulate in wrapping int32, and the accumulator-to-element
  conversion rounds half to even and saturates to [-128, 127];
* float32 inputs accumulate in float32 with the k (reduction) loop
  outermost, matching the systolic array's per-k accumulation order;
* the controller rollout is computed in float32, matching the kernels'
  working precision: the closed-loop recurrence amplifies rounding
  differences step over step, so a higher-precision reference would drift
  past any fixed tolerance on longer horizons without the kernel being
  wrong.  Operation *order* still differs (numpy matmul vs. the array's
  per-k accumulation), which the equivalence tolerance absorbs.
"""

from __future__ import annotations

import numpy as np

from .workloads import WorkloadSpec


def _to_int8(acc: np.ndarray) -> np.ndarray:
    """int32 accumulator -> int8 element: round-half-even, then saturate."""
    return np.clip(np.rint(acc.astype(np.float64)), -128, 127).astype(np.int8)


def _gemm_int(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    acc = a.astype(np.int32) @ b.astype(np.int32)  # wraps like the machine
    return _to_int8(acc)


def _gemm_f32(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    m, k = a.shape
    n = b.shape[1]
    acc = np.zeros((m, n), dtype=np.float32)
    for kk in range(k):  # reduction outermost: one rank-1 update per k
        acc += np.outer(a[:, kk], b[kk, :])
    return acc


def reference_gemm(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """C = A @ B under the machine's accumulation and conversion rules."""
    if a.dtype == np.int8:
        return _gemm_int(a, b)
    return _gemm_f32(a.astype(np.float32), b.astype(np.float32))


def reference_conv(inp: np.ndarray, weights: np.ndarray,
                   stride: int = 1) -> np.ndarray:
    """Direct NHWC convolution, no padding, same arithmetic as the GEMM."""
    batch, h, w, cin = inp.shape
    kh, kw, _, cout = weights.shape
    oh = (h - kh) // stride + 1
    ow = (w - kw) // stride + 1
    is_int = inp.dtype == np.int8
    acc_t = np.int32 if is_int else np.float32
    acc = np.zeros((batch, oh, ow, cout), dtype=acc_t)
    wmat = weights.astype(acc_t).reshape(kh * kw * cin, cout)
    for n in range(batch):
        for oy in range(oh):
            for ox in range(ow):
                patch = inp[n, oy * stride:oy * stride + kh,
                            ox * stride:ox * stride + kw, :]
                if is_int:
                    acc[n, oy, ox] = patch.astype(acc_t).reshape(-1) @ wmat
                else:
                    # reduction order matches the f32 GEMM: one term at a time
                    flat = patch.astype(np.float32).reshape(-1)
                    out = np.zeros(cout, dtype=np.float32)
                    for i in range(flat.shape[0]):
                        out += flat[i] * wmat[i]
                    acc[n, oy, ox] = out
    return _to_int8(acc) if is_int else acc


def reference_tinympc_forward(adyn: np.ndarray, bdyn: np.ndarray,
                              kinf: np.ndarray, x0: np.ndarray,
                              d: np.ndarray, nhorizon: int) -> dict:
    """LQR feedback rollout: u[i] = -Kinf x[i] - d[i]; x advances by the
    linear dynamics (states computed through index nhorizon-1).  Returns
    float32 ``u`` and ``x`` trajectories."""
    adyn = adyn.astype(np.float32)
    bdyn = bdyn.astype(np.float32)
    kinf = kinf.astype(np.float32)
    x = np.zeros((nhorizon + 1, x0.shape[0], 1), dtype=np.float32)
    u = np.zeros((nhorizon, kinf.shape[0], 1), dtype=np.float32)
    x[0] = x0.astype(np.float32)
    for i in range(nhorizon):
        u[i] = -(kinf @ x[i]) - d[i].astype(np.float32)
        if i < nhorizon - 1:
            x[i + 1] = adyn @ x[i] + bdyn @ u[i]
    return {"u": u, "x": x}


def reference_outputs(spec: WorkloadSpec, inputs: dict) -> dict:
    """Expected values for every output parameter of a workload."""
    if spec.kind == "gemm":
        return {"C": reference_gemm(inputs["A"], inputs["B"])}
    if spec.kind == "conv":
        return {"output": reference_conv(inputs["input"], inputs["weights"],
                                         spec.dims["stride"])}
    ref = reference_tinympc_forward(
        inputs["Adyn"], inputs["Bdyn"], inputs["Kinf"], inputs["x"][0],
        inputs["d"], spec.dims["NHORIZON"])
    return {"u": ref["u"]}
