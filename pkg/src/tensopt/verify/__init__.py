"""Correctness/performance verification of kernels against reference math."""

from .equivalence import (ABS_TOL, REL_TOL, Mismatch, Verdict,
                          check_equivalence, verify_source)
from .oracles import (reference_conv, reference_gemm, reference_outputs,
                      reference_tinympc_forward)
from .workloads import (NINPUTS, NSTATES, WorkloadSpec, conv_spec,
                        gemm_spec, gemm_template, generate_inputs,
                        param_shapes, start_kernel, tinympc_spec)

__all__ = [
    "ABS_TOL", "REL_TOL", "Mismatch", "Verdict", "check_equivalence",
    "verify_source", "reference_conv", "reference_gemm", "reference_outputs",
    "reference_tinympc_forward", "NINPUTS", "NSTATES", "WorkloadSpec",
    "conv_spec", "gemm_spec", "gemm_template", "generate_inputs",
    "param_shapes", "start_kernel", "tinympc_spec",
]
