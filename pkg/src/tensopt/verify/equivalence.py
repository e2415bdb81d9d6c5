"""Correctness and performance checking of kernels against the oracles.

A kernel is run on several independently seeded random input sets and its
outputs compared to the reference implementation.  Integer outputs must
match exactly; float32 outputs must satisfy

    |actual - expected| <= 1e-6 + 1e-5 * |expected|

elementwise (an absolute floor plus a relative term, both in float64).
Functional trials run on the untimed engine; timed trials then measure
latency.  The reported ``latency_cycles`` always comes from the trial
seeded directly with ``base_seed`` (the canonical trial), so latency is a
pure function of (kernel, config, base_seed) regardless of trial counts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..dsl import KernelProgram, parse_kernel, validate_kernel
from ..sim import (AcceleratorConfig, LoweringError, PerfReport,
                   SimulationError, run_functional, run_timed)
from .oracles import reference_outputs
from .workloads import WorkloadSpec, generate_inputs

ABS_TOL = 1e-6
REL_TOL = 1e-5


@dataclass(frozen=True)
class Mismatch:
    """First detected divergence: which parameter, where, and both values."""

    param: str
    index: tuple[int, ...]
    expected: float
    actual: float
    trial: int = 0
    detail: str = ""

    def to_json(self) -> dict:
        return {"param": self.param, "index": list(self.index),
                "expected": self.expected, "actual": self.actual,
                "trial": self.trial, "detail": self.detail}


@dataclass(frozen=True)
class Verdict:
    """Outcome of an equivalence check."""

    correct: bool
    trials_run: int
    first_mismatch: Mismatch | None = None
    latency_cycles: int | None = None
    perf: PerfReport | None = None

    def to_json(self) -> dict:
        return {
            "correct": self.correct,
            "trials_run": self.trials_run,
            "first_mismatch": (None if self.first_mismatch is None
                               else self.first_mismatch.to_json()),
            "latency_cycles": self.latency_cycles,
            "perf": None if self.perf is None else self.perf.to_json(),
        }


def _compare(spec: WorkloadSpec, expected: dict, actual: dict,
             trial: int) -> Mismatch | None:
    """First out-of-tolerance element across the workload's outputs."""
    for name in spec.outputs:
        exp = expected[name]
        act = actual[name]
        if np.issubdtype(exp.dtype, np.integer):
            bad = exp != act
        else:
            e = exp.astype(np.float64)
            a = act.astype(np.float64)
            err = np.abs(a - e)
            bad = ~(err <= ABS_TOL + REL_TOL * np.abs(e))  # catches NaN too
        if bad.any():
            idx = tuple(int(v) for v in
                        np.unravel_index(int(np.argmax(bad)), bad.shape))
            return Mismatch(param=name, index=idx,
                            expected=float(exp[idx]), actual=float(act[idx]),
                            trial=trial)
    return None


def _error_verdict(trial: int, err: Exception) -> Verdict:
    kind = "lowering" if isinstance(err, LoweringError) else "simulation"
    return Verdict(
        correct=False, trials_run=trial + 1,
        first_mismatch=Mismatch(param=f"({kind})", index=(), expected=0.0,
                                actual=0.0, trial=trial, detail=str(err)))


def check_equivalence(prog: KernelProgram, spec: WorkloadSpec,
                      cfg: AcceleratorConfig, n_functional: int = 5,
                      n_timed: int = 20, base_seed: int = 0) -> Verdict:
    """Run functional then timed trials; stop at the first failure.

    Trial seeds are derived from ``base_seed``: functional trial *i* uses
    ``[base_seed, 1000 + i]``, the canonical timed trial uses ``base_seed``
    alone, and extra timed trials use ``[base_seed, 2000 + i]``.
    """
    trials = 0
    latency: int | None = None
    perf: PerfReport | None = None

    for i in range(n_functional):
        inputs = generate_inputs(spec, np.random.default_rng([base_seed,
                                                              1000 + i]))
        expected = reference_outputs(spec, inputs)
        try:
            outputs, _ = run_functional(prog, cfg, inputs)
        except (SimulationError, LoweringError, ValueError) as err:
            return _error_verdict(trials, err)
        trials += 1
        mm = _compare(spec, expected, outputs, i)
        if mm is not None:
            return Verdict(correct=False, trials_run=trials,
                           first_mismatch=mm)

    for i in range(n_timed):
        seed = base_seed if i == 0 else [base_seed, 2000 + i]
        inputs = generate_inputs(spec, np.random.default_rng(seed))
        expected = reference_outputs(spec, inputs)
        try:
            outputs, rep, _ = run_timed(prog, cfg, inputs)
        except (SimulationError, LoweringError, ValueError) as err:
            return _error_verdict(trials, err)
        trials += 1
        mm = _compare(spec, expected, outputs, n_functional + i)
        if mm is not None:
            return Verdict(correct=False, trials_run=trials,
                           first_mismatch=mm)
        if i == 0:
            latency = rep.total_cycles
            perf = rep

    return Verdict(correct=True, trials_run=trials,
                   latency_cycles=latency, perf=perf)


def verify_source(text: str, spec: WorkloadSpec, cfg: AcceleratorConfig,
                  n_functional: int = 5, n_timed: int = 20,
                  base_seed: int = 0) -> tuple[Verdict, list]:
    """Parse + validate + check a kernel given as source text.

    Parse or validation failures become an incorrect verdict whose mismatch
    detail carries the first diagnostic; the full diagnostic list is
    returned alongside.
    """
    prog, diags = parse_kernel(text)
    if prog is not None:
        diags = diags + validate_kernel(prog, cfg)
    errors = [d for d in diags if d.severity == "error"]
    if prog is None or errors:
        msg = str(errors[0]) if errors else "parse failed"
        verdict = Verdict(
            correct=False, trials_run=0,
            first_mismatch=Mismatch(param="(frontend)", index=(),
                                    expected=0.0, actual=0.0, detail=msg))
        return verdict, diags
    return check_equivalence(prog, spec, cfg, n_functional=n_functional,
                             n_timed=n_timed, base_seed=base_seed), []
