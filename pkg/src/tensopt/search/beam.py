"""The plan-then-code beam search, schedule recording, and schedule reuse.

Each iteration expands every beam member with N independently sampled
plans, each plan with K code samples; children survive only if they verify
correct AND beat their parent's latency; the next beam is the best B of
parents-plus-children.  All sampling randomness derives from (seed,
iteration, member index, sample index), and LLM calls are issued in that
canonical order, so a seeded run with a scripted backend is reproducible
byte for byte.
"""

from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from ..dsl import (KernelProgram, extract_code_block, parse_kernel,
                   print_kernel, validate_kernel)
from ..llm import Backend, CompletionError, ensemble_assign
from ..sim import AcceleratorConfig, compute_feedback
from ..verify import Verdict, WorkloadSpec, check_equivalence
from .prompts import build_code_prompt, build_plan_prompt, parse_plan_response
from .trace import TraceWriter
from .types import (BeamState, CallCounts, Candidate, Plan, Schedule,
                    ScheduleStep, SearchConfig, SearchResult)

Evaluator = Callable[[KernelProgram, str], Verdict]


class SeedKernelError(Exception):
    """The starting kernel failed to parse, validate, or verify."""


def canonical_hash(prog: KernelProgram) -> str:
    """Hash of the pretty-printed program, so formatting and comments
    don't count as distinct candidates."""
    return hashlib.sha256(print_kernel(prog).encode()).hexdigest()


def make_evaluator(spec: WorkloadSpec, cfg: AcceleratorConfig,
                   n_functional: int = 5, n_timed: int = 20,
                   base_seed: int = 0) -> Evaluator:
    """Standard evaluator: oracle equivalence plus canonical-trial timing."""
    if n_timed < 1:
        raise ValueError("search evaluation needs at least one timed trial")

    def evaluate(prog: KernelProgram, code_text: str) -> Verdict:
        return check_equivalence(prog, spec, cfg, n_functional=n_functional,
                                 n_timed=n_timed, base_seed=base_seed)

    return evaluate


@dataclass
class SearchState:
    """Cross-iteration bookkeeping: verdict cache and discovery numbering."""

    next_discovery: int = 1
    cache: dict[str, Verdict] = field(default_factory=dict)
    candidates: dict[str, Candidate] = field(default_factory=dict)


def _token_fields(comp) -> dict:
    out = {}
    if comp.prompt_tokens is not None:
        out["prompt_tokens"] = comp.prompt_tokens
    if comp.completion_tokens is not None:
        out["completion_tokens"] = comp.completion_tokens
    return out


def _beam_payload(beam: BeamState) -> dict:
    return {
        "members": [{"id": c.id, "latency": c.latency,
                     "code_hash": c.code_hash} for c in beam.members],
        "best": beam.best.id,
        "best_latency": beam.best.latency,
    }


def run_iteration(beam: BeamState, sc: SearchConfig,
                  backends: Sequence[Backend], evaluator: Evaluator, *,
                  iteration: int | None = None,
                  cfg: AcceleratorConfig | None = None,
                  trace: TraceWriter | None = None,
                  calls: CallCounts | None = None,
                  state: SearchState | None = None,
                  reuse_constraint: str | None = None,
                  reuse_hint: str | None = None,
                  phase: str = "search",
                  jobs: int = 1) -> BeamState:
    """Expand and re-select the beam once.

    Individual backend failures are recorded in the trace and dropped;
    they never abort the iteration.  ``phase`` ("search" or "reuse") picks
    which call counters the iteration charges.
    """
    if not backends:
        raise ValueError("no backends to sample from")
    it = beam.iteration + 1 if iteration is None else iteration
    trace = trace if trace is not None else TraceWriter()
    calls = calls if calls is not None else CallCounts()
    state = state if state is not None else SearchState()
    plan_key = "reuse_plan" if phase == "reuse" else "plan"
    code_key = "reuse_code" if phase == "reuse" else "code"

    # Phase 1: sample N plans per member, canonical order.
    plan_jobs = []
    for mi, cand in enumerate(beam.members):
        for si in range(sc.plans_per_element):
            rng = np.random.default_rng([sc.seed, it, mi, si])
            prompt = build_plan_prompt(cand, sc, rng,
                                       reuse_constraint=reuse_constraint,
                                       reuse_hint=reuse_hint)
            plan_jobs.append((mi, si, cand, prompt))
    if sc.ablations.enable_ensemble:
        plan_models = ensemble_assign(max(1, len(plan_jobs)), len(backends))
    else:
        plan_models = [0] * len(plan_jobs)

    plans: list[tuple[int, int, Candidate, Plan]] = []
    for j, (mi, si, cand, prompt) in enumerate(plan_jobs):
        model_idx = plan_models[j]
        ids = {"parent": cand.id, "member": mi, "sample": si,
               "model": model_idx}
        trace.write("plan_request", it, ids, {"prompt": prompt})
        setattr(calls, plan_key, getattr(calls, plan_key) + 1)
        try:
            comp = backends[model_idx].complete(prompt, "plan")
        except CompletionError as err:
            trace.write("plan_response", it, ids, {"error": str(err)})
            continue
        plan = parse_plan_response(comp.text, sc.menu)
        payload = {"text": comp.text, "menu_option": plan.menu_option,
                   **_token_fields(comp)}
        trace.write("plan_response", it, ids, payload)
        plans.append((mi, si, cand, plan))

    # Phase 2: sample K code rewrites per plan, canonical order.
    code_jobs = []
    for mi, si, cand, plan in plans:
        prompt = build_code_prompt(cand, plan, sc)
        for ci in range(sc.codes_per_plan):
            code_jobs.append((mi, si, ci, cand, plan, prompt))
    if sc.ablations.enable_ensemble:
        code_models = ensemble_assign(max(1, len(code_jobs)), len(backends))
    else:
        code_models = [0] * len(code_jobs)

    parsed = []  # (mi, si, ci, cand, plan, prog, text, hash)
    for j, (mi, si, ci, cand, plan, prompt) in enumerate(code_jobs):
        model_idx = code_models[j]
        ids = {"parent": cand.id, "member": mi, "sample": si,
               "code_sample": ci, "model": model_idx}
        trace.write("code_request", it, ids, {"prompt": prompt})
        setattr(calls, code_key, getattr(calls, code_key) + 1)
        try:
            comp = backends[model_idx].complete(prompt, "code")
        except CompletionError as err:
            trace.write("code_response", it, ids, {"error": str(err)})
            continue
        trace.write("code_response", it, ids,
                    {"text": comp.text, **_token_fields(comp)})
        code_text = extract_code_block(comp.text)
        if code_text is None:
            trace.write("verdict", it, ids,
                        {"ok": False, "reason": "no code block in response"})
            continue
        prog, diags = parse_kernel(code_text)
        if prog is not None:
            diags = diags + validate_kernel(prog, cfg)
        errors = [d for d in diags if d.severity == "error"]
        if prog is None or errors:
            reason = str(errors[0]) if errors else "parse failed"
            trace.write("verdict", it, ids, {"ok": False, "reason": reason})
            continue
        parsed.append((mi, si, ci, cand, plan, prog, code_text,
                       canonical_hash(prog)))

    # Evaluate each distinct new program once (order-independent, so this
    # is safe to spread over threads).
    pending: dict[str, tuple[KernelProgram, str]] = {}
    for mi, si, ci, cand, plan, prog, text, h in parsed:
        if h not in state.cache and h not in pending:
            pending[h] = (prog, text)
    items = list(pending.items())
    if jobs > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            verdicts = list(pool.map(
                lambda kv: evaluator(kv[1][0], kv[1][1]), items))
    else:
        verdicts = [evaluator(prog, text) for _, (prog, text) in items]
    for (h, _), v in zip(items, verdicts):
        state.cache[h] = v

    # Admission: correct and strictly faster than the parent.
    admitted: list[Candidate] = []
    seen_hashes = {c.code_hash for c in beam.members}
    for mi, si, ci, cand, plan, prog, text, h in parsed:
        v = state.cache[h]
        child_id = f"i{it}.m{mi}.p{si}.c{ci}"
        improves = bool(v.correct and v.latency_cycles is not None
                        and v.latency_cycles < cand.latency)
        take = improves and h not in seen_hashes
        ids = {"parent": cand.id, "member": mi, "sample": si,
               "code_sample": ci, "candidate": child_id}
        trace.write("verdict", it, ids,
                    {"ok": bool(v.correct), "admitted": take,
                     "duplicate": improves and not take,
                     "code_hash": h, "verdict": v.to_json()})
        if not take:
            continue
        seen_hashes.add(h)
        feedback = ""
        if cfg is not None and v.perf is not None:
            feedback = compute_feedback(v.perf, cfg)
        child = Candidate(
            id=child_id, code_text=text, ast=prog, verdict=v, code_hash=h,
            parent_id=cand.id, plan=plan, iteration_found=it,
            discovery_index=state.next_discovery, feedback=feedback)
        state.next_discovery += 1
        state.candidates[child.id] = child
        admitted.append(child)

    pool_cands = sorted(list(beam.members) + admitted,
                        key=lambda c: (c.latency, c.discovery_index))
    members: list[Candidate] = []
    taken: set[str] = set()
    for c in pool_cands:
        if c.code_hash in taken:
            continue
        taken.add(c.code_hash)
        members.append(c)
        if len(members) == sc.beam_width:
            break
    best = min((beam.best, members[0]),
               key=lambda c: (c.latency, c.discovery_index))
    new_beam = BeamState(iteration=it, members=tuple(members), best=best)
    trace.write("beam", it, {}, _beam_payload(new_beam))
    return new_beam


def _make_root(start_code: str, sc: SearchConfig,
               cfg: AcceleratorConfig | None,
               evaluator: Evaluator) -> Candidate:
    prog, diags = parse_kernel(start_code)
    if prog is not None:
        diags = diags + validate_kernel(prog, cfg)
    errors = [d for d in diags if d.severity == "error"]
    if prog is None or errors:
        raise SeedKernelError(str(errors[0]) if errors
                              else "start kernel failed to parse")
    verdict = evaluator(prog, start_code)
    if not verdict.correct or verdict.latency_cycles is None:
        mm = verdict.first_mismatch
        detail = (mm.detail or f"{mm.param}{list(mm.index)}"
                  if mm else "unknown mismatch")
        raise SeedKernelError(f"start kernel failed verification: {detail}")
    feedback = ""
    if cfg is not None and verdict.perf is not None:
        feedback = compute_feedback(verdict.perf, cfg)
    return Candidate(id="root", code_text=start_code, ast=prog,
                     verdict=verdict, code_hash=canonical_hash(prog),
                     iteration_found=0, discovery_index=0,
                     feedback=feedback)


def build_schedule(best: Candidate, candidates: dict[str, Candidate],
                   fingerprint: dict) -> Schedule:
    """Root-to-best chain of plan steps with their latency transitions."""
    chain: list[Candidate] = []
    cur: Candidate | None = best
    while cur is not None:
        chain.append(cur)
        cur = candidates.get(cur.parent_id) if cur.parent_id else None
    chain.reverse()
    steps = []
    for parent, child in zip(chain, chain[1:]):
        plan = child.plan
        steps.append(ScheduleStep(
            menu_option=plan.menu_option if plan else "other",
            plan_text=plan.plan_text if plan else "",
            latency_before=parent.latency,
            latency_after=child.latency))
    return Schedule(steps=tuple(steps), fingerprint=fingerprint)


def record_schedule(result: SearchResult) -> dict:
    """Serialized form of a result's schedule (the schedule-file payload)."""
    return result.schedule.to_json()


def run_search(start_code: str, spec: WorkloadSpec, cfg: AcceleratorConfig,
               sc: SearchConfig, backends: Sequence[Backend], *,
               trace: TraceWriter | None = None,
               evaluator: Evaluator | None = None,
               n_functional: int = 5, n_timed: int = 20,
               jobs: int = 1) -> SearchResult:
    """Full beam search from a verified starting kernel."""
    if not backends:
        raise ValueError("no backends to sample from")
    trace = trace if trace is not None else TraceWriter()
    evaluator = evaluator or make_evaluator(spec, cfg, n_functional, n_timed,
                                            sc.seed)
    root = _make_root(start_code, sc, cfg, evaluator)
    state = SearchState(candidates={root.id: root})
    calls = CallCounts()
    beam = BeamState(iteration=0, members=(root,), best=root)
    trace.write("beam", 0, {}, _beam_payload(beam))
    result = SearchResult(best=root, schedule=Schedule((), spec.fingerprint()),
                          beams=[beam], candidates=state.candidates,
                          calls=calls)
    result.curve.append({"iteration": 0, "calls": 0,
                         "best_latency": root.latency})
    for it in range(1, sc.iterations + 1):
        beam = run_iteration(beam, sc, backends, evaluator, iteration=it,
                             cfg=cfg, trace=trace, calls=calls, state=state,
                             jobs=jobs)
        result.beams.append(beam)
        result.curve.append({"iteration": it, "calls": calls.total,
                             "best_latency": beam.best.latency})
    result.best = beam.best
    result.schedule = build_schedule(beam.best, state.candidates,
                                     spec.fingerprint())
    return result


def run_reuse_search(start_code: str, spec: WorkloadSpec,
                     cfg: AcceleratorConfig, recorded: Schedule,
                     sc: SearchConfig, backends: Sequence[Backend], *,
                     reuse_bnk: tuple[int, int, int] = (2, 2, 2),
                     refine_iters: int = 0,
                     include_hint: bool = True,
                     trace: TraceWriter | None = None,
                     evaluator: Evaluator | None = None,
                     n_functional: int = 5, n_timed: int = 20,
                     jobs: int = 1) -> SearchResult:
    """Replay a recorded schedule step by step at a small budget, then
    optionally refine with full-menu iterations.

    The reuse phase runs one constrained iteration per recorded step (the
    menu collapsed to that step's option, optionally with the recorded
    plan text as a hint); refine iterations then continue at the search
    config's own parameters.  Call counts are tracked per phase.
    """
    if not recorded.steps:
        raise ValueError("recorded schedule has no steps to reuse")
    if not backends:
        raise ValueError("no backends to sample from")
    trace = trace if trace is not None else TraceWriter()
    evaluator = evaluator or make_evaluator(spec, cfg, n_functional, n_timed,
                                            sc.seed)
    rb, rn, rk = reuse_bnk
    sc_reuse = replace(sc, beam_width=rb, plans_per_element=rn,
                       codes_per_plan=rk)
    root = _make_root(start_code, sc, cfg, evaluator)
    state = SearchState(candidates={root.id: root})
    calls = CallCounts()
    beam = BeamState(iteration=0, members=(root,), best=root)
    trace.write("beam", 0, {}, _beam_payload(beam))
    result = SearchResult(best=root, schedule=Schedule((), spec.fingerprint()),
                          beams=[beam], candidates=state.candidates,
                          calls=calls)
    result.curve.append({"iteration": 0, "calls": 0,
                         "best_latency": root.latency, "phase": "reuse"})
    it = 0
    for step in recorded.steps:
        it += 1
        beam = run_iteration(
            beam, sc_reuse, backends, evaluator, iteration=it, cfg=cfg,
            trace=trace, calls=calls, state=state,
            reuse_constraint=step.menu_option,
            reuse_hint=step.plan_text if include_hint else None,
            phase="reuse", jobs=jobs)
        result.beams.append(beam)
        result.curve.append({"iteration": it, "calls": calls.total,
                             "best_latency": beam.best.latency,
                             "phase": "reuse"})
    for _ in range(refine_iters):
        it += 1
        beam = run_iteration(beam, sc, backends, evaluator, iteration=it,
                             cfg=cfg, trace=trace, calls=calls, state=state,
                             jobs=jobs)
        result.beams.append(beam)
        result.curve.append({"iteration": it, "calls": calls.total,
                             "best_latency": beam.best.latency,
                             "phase": "refine"})
    result.best = beam.best
    result.schedule = build_schedule(beam.best, state.candidates,
                                     spec.fingerprint())
    return result
