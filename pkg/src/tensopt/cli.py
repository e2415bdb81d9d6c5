"""Command-line interface.

Subcommands::

    tensopt simulate  KERNEL.gk CONFIG [--no-timed] [--inputs SEED] [--events]
    tensopt verify    KERNEL.gk CONFIG [--trials F,T] [--seed S]
    tensopt optimize  CONFIG [--jobs N]
    tensopt reuse     CONFIG --schedule FILE [--refine N] [--jobs N]
    tensopt report    TRACE.jsonl [--format json|csv]

Exit codes: 0 success (verify: correct); 1 verify found a mismatch; 2
parse/validation failure (diagnostics on stderr) or malformed trace; 3
simulation error; 4 optimize/reuse start kernel failed verification.

Every command is deterministic given its config, seed, and a scripted
backend: output files are byte-identical across runs.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .dsl import parse_kernel, validate_kernel
from .llm import OpenAIBackend, ScriptManifest, ScriptedBackend
from .runconfig import RunConfig, load_accelerator_config, load_run_config
from .search import (Schedule, SearchResult, SeedKernelError, TraceWriter,
                     read_trace, run_reuse_search, run_search, shared_dims)
from .sim import (AcceleratorConfig, LoweringError, SimulationError,
                  compute_feedback, lower_kernel, run_functional, run_timed)
from .verify import verify_source

EXIT_OK = 0
EXIT_INCORRECT = 1
EXIT_FRONTEND = 2
EXIT_SIM = 3
EXIT_SEED = 4


def _fail_frontend(diags) -> int:
    for d in diags:
        print(str(d), file=sys.stderr)
    return EXIT_FRONTEND


def _parse_and_check(text: str, cfg: AcceleratorConfig):
    """(program, error_exit_code_or_None); diagnostics go to stderr."""
    prog, diags = parse_kernel(text)
    if prog is not None:
        diags = diags + validate_kernel(prog, cfg)
    errors = [d for d in diags if d.severity == "error"]
    if prog is None or errors:
        return None, _fail_frontend(errors or diags)
    return prog, None


def _random_inputs(prog, cfg: AcceleratorConfig, seed: int) -> dict:
    """Random values for every kernel parameter, by declared element type."""
    from .sim.lower import DTYPE_NUMPY

    low = lower_kernel(prog, cfg)
    rng = np.random.default_rng(seed)
    inputs = {}
    for info in low.arrays:
        if not info.is_param:
            continue
        dt = np.dtype(DTYPE_NUMPY[info.dtype_code])
        if dt == np.float32:
            inputs[info.name] = rng.uniform(-1.0, 1.0,
                                            info.shape).astype(np.float32)
        else:
            inputs[info.name] = rng.integers(-128, 128, info.shape,
                                             dtype=np.int8).astype(dt)
    return inputs


def cmd_simulate(args) -> int:
    text = Path(args.kernel).read_text()
    cfg = load_accelerator_config(args.config)
    prog, err = _parse_and_check(text, cfg)
    if err is not None:
        return err
    inputs = _random_inputs(prog, cfg, args.inputs)
    try:
        if args.timed:
            _, report, trace = run_timed(prog, cfg, inputs,
                                         record_events=args.events)
            print(compute_feedback(report, cfg))
            print(json.dumps(report.to_json(), sort_keys=True, indent=2))
        else:
            _, trace = run_functional(prog, cfg, inputs)
            print(json.dumps({
                "instr_counts": trace.instr_counts,
                "dram_bytes_in": trace.dram_bytes_in,
                "dram_bytes_out": trace.dram_bytes_out,
                "macs": trace.macs,
                "spad_rows_written": trace.spad_rows_written,
                "acc_rows_written": trace.acc_rows_written,
                "nodes_evaluated": trace.nodes_evaluated,
            }, sort_keys=True, indent=2))
    except (SimulationError, LoweringError) as err:
        print(f"simulation error: {err}", file=sys.stderr)
        return EXIT_SIM
    return EXIT_OK


def cmd_verify(args) -> int:
    text = Path(args.kernel).read_text()
    rc = load_run_config(args.config)
    try:
        n_functional, n_timed = (int(v) for v in args.trials.split(","))
    except ValueError:
        print(f"--trials expects F,T (got {args.trials!r})", file=sys.stderr)
        return EXIT_FRONTEND
    verdict, diags = verify_source(
        text, rc.workload, rc.accelerator, n_functional=n_functional,
        n_timed=n_timed, base_seed=args.seed)
    if verdict.first_mismatch is not None and \
            verdict.first_mismatch.param == "(frontend)":
        return _fail_frontend(diags)
    print(json.dumps(verdict.to_json(), sort_keys=True, indent=2))
    if verdict.correct:
        return EXIT_OK
    if verdict.first_mismatch.param in ("(simulation)", "(lowering)"):
        print(f"simulation error: {verdict.first_mismatch.detail}",
              file=sys.stderr)
        return EXIT_SIM
    return EXIT_INCORRECT


def _make_backends(rc: RunConfig) -> list:
    if rc.backend_mode == "scripted":
        return [ScriptedBackend(ScriptManifest.load(rc.script_path))]
    if rc.backend_mode == "live":
        return [OpenAIBackend(m) for m in rc.models]
    raise ValueError("config has no [backends] section")


def _sum_tokens(records: list[dict]) -> dict:
    prompt = completion = 0
    for r in records:
        p = r.get("payload", {})
        prompt += p.get("prompt_tokens") or 0
        completion += p.get("completion_tokens") or 0
    return {"prompt": prompt, "completion": completion}


def _candidate_stats(records: list[dict]) -> dict:
    evaluated = admitted = failed = 0
    for r in records:
        if r["kind"] == "verdict":
            evaluated += 1
            if r["payload"].get("admitted"):
                admitted += 1
            elif not r["payload"].get("ok"):
                failed += 1
        elif r["kind"] in ("plan_response", "code_response") and \
                "error" in r.get("payload", {}):
            failed += 1
    return {"evaluated": evaluated, "admitted": admitted, "failed": failed}


def _build_report(result: SearchResult, records: list[dict]) -> dict:
    start = result.curve[0]["best_latency"]
    best = result.best.latency
    return {
        "start_latency": start,
        "best_latency": best,
        "speedup": start / best,
        "iterations": result.curve,
        "calls": result.calls.to_json(),
        "tokens": _sum_tokens(records),
        "candidates": _candidate_stats(records),
        "schedule": [
            {"menu_option": s.menu_option,
             "latency_before": s.latency_before,
             "latency_after": s.latency_after}
            for s in result.schedule.steps
        ],
    }


def _write_outputs(rc: RunConfig, result: SearchResult, trace: TraceWriter,
                   extra: dict | None = None) -> None:
    out = rc.output_dir
    out.mkdir(parents=True, exist_ok=True)
    report = _build_report(result, trace.records)
    if extra:
        report.update(extra)
    (out / "schedule.json").write_text(
        json.dumps(result.schedule.to_json(), sort_keys=True, indent=2)
        + "\n")
    (out / "report.json").write_text(
        json.dumps(report, sort_keys=True, indent=2) + "\n")
    (out / "best.gk").write_text(result.best.code_text)
    start = result.curve[0]["best_latency"]
    print(f"best latency {result.best.latency} cycles "
          f"(start {start}, speedup {start / result.best.latency:.2f}x); "
          f"outputs in {out}")


def cmd_optimize(args) -> int:
    rc = load_run_config(args.config)
    backends = _make_backends(rc)
    rc.output_dir.mkdir(parents=True, exist_ok=True)
    trace = TraceWriter(rc.output_dir / "trace.jsonl")
    try:
        result = run_search(
            rc.start_code, rc.workload, rc.accelerator, rc.search, backends,
            trace=trace, n_functional=rc.trials_functional,
            n_timed=rc.trials_timed, jobs=args.jobs)
    except SeedKernelError as err:
        print(f"start kernel rejected: {err}", file=sys.stderr)
        return EXIT_SEED
    finally:
        trace.close()
    _write_outputs(rc, result, trace)
    return EXIT_OK


def cmd_reuse(args) -> int:
    rc = load_run_config(args.config)
    backends = _make_backends(rc)
    recorded = Schedule.from_json(json.loads(Path(args.schedule).read_text()))
    fp_here = rc.workload.fingerprint()
    if recorded.fingerprint != fp_here and shared_dims(recorded.fingerprint, fp_here) < 2:
        print("warning: recorded schedule shares fewer than two dimensions "
              "with this workload; transfer may not help", file=sys.stderr)
    rc.output_dir.mkdir(parents=True, exist_ok=True)
    trace = TraceWriter(rc.output_dir / "trace.jsonl")
    try:
        result = run_reuse_search(
            rc.start_code, rc.workload, rc.accelerator, recorded, rc.search,
            backends, reuse_bnk=(args.reuse_b, args.reuse_n, args.reuse_k),
            refine_iters=args.refine, trace=trace,
            n_functional=rc.trials_functional, n_timed=rc.trials_timed,
            jobs=args.jobs)
    except SeedKernelError as err:
        print(f"start kernel rejected: {err}", file=sys.stderr)
        return EXIT_SEED
    finally:
        trace.close()
    calls = result.calls
    _write_outputs(rc, result, trace, extra={
        "calls_reuse": calls.reuse_plan + calls.reuse_code,
        "calls_refine": calls.plan + calls.code,
        "curve": result.curve,
    })
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        records = read_trace(args.trace)
    except (ValueError, OSError) as err:
        print(f"malformed trace: {err}", file=sys.stderr)
        return EXIT_FRONTEND
    per_iter: dict[int, dict] = {}
    for r in records:
        it = int(r["iteration"])
        row = per_iter.setdefault(it, {"iteration": it, "best_latency": None,
                                       "plan_calls": 0, "code_calls": 0})
        if r["kind"] == "plan_request":
            row["plan_calls"] += 1
        elif r["kind"] == "code_request":
            row["code_calls"] += 1
        elif r["kind"] == "beam":
            row["best_latency"] = r["payload"]["best_latency"]
    rows = [per_iter[it] for it in sorted(per_iter)]
    cumulative = 0
    for row in rows:
        cumulative += row["plan_calls"] + row["code_calls"]
        row["cumulative_calls"] = cumulative
    tokens = _sum_tokens(records)
    if args.format == "csv":
        print("iteration,best_latency,plan_calls,code_calls,cumulative_calls")
        for row in rows:
            lat = "" if row["best_latency"] is None else row["best_latency"]
            print(f"{row['iteration']},{lat},{row['plan_calls']},"
                  f"{row['code_calls']},{row['cumulative_calls']}")
    else:
        print(json.dumps({"iterations": rows, "tokens": tokens,
                          "total_calls": cumulative},
                         sort_keys=True, indent=2))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="tensopt",
        description="Optimize accelerator kernels with LLM-guided search.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one kernel on the simulator")
    p.add_argument("kernel")
    p.add_argument("config")
    p.add_argument("--timed", action=argparse.BooleanOptionalAction,
                   default=True, help="use the timing model (default on)")
    p.add_argument("--inputs", type=int, default=0, metavar="SEED",
                   help="seed for random input values")
    p.add_argument("--events", action="store_true",
                   help="record per-instruction events (timed mode)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="check a kernel against its oracle")
    p.add_argument("kernel")
    p.add_argument("config")
    p.add_argument("--trials", default="5,20", metavar="F,T",
                   help="functional,timed trial counts (default 5,20)")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("optimize", help="run the full beam search")
    p.add_argument("config")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("reuse", help="replay a recorded schedule, then refine")
    p.add_argument("config")
    p.add_argument("--schedule", required=True)
    p.add_argument("--refine", type=int, default=0,
                   help="full-search iterations after the replay")
    p.add_argument("--reuse-b", type=int, default=2)
    p.add_argument("--reuse-n", type=int, default=2)
    p.add_argument("--reuse-k", type=int, default=2)
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    p.set_defaults(func=cmd_reuse)

    p = sub.add_parser("report", help="summarize a search trace")
    p.add_argument("trace")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_report)
    return ap


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (OSError, ValueError) as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_FRONTEND


if __name__ == "__main__":
    sys.exit(main())
