"""Two-phase plan-then-code beam search with menu dropout and schedule reuse."""

from .beam import (SearchState, SeedKernelError, build_schedule,
                   canonical_hash, make_evaluator, record_schedule,
                   run_iteration, run_reuse_search, run_search)
from .menus import (MENU_HEADER, load_menu, parse_menu_asset,
                    render_constrained_menu, render_menu)
from .prompts import (build_code_prompt, build_plan_prompt,
                      load_prompt_asset, parse_plan_response)
from .trace import KINDS, TraceWriter, read_trace
from .types import (Ablations, BeamState, CallCounts, Candidate, MenuConfig,
                    Plan, Schedule, ScheduleStep, SearchConfig, SearchResult,
                    shared_dims)

__all__ = [
    "SearchState", "SeedKernelError", "build_schedule", "canonical_hash",
    "make_evaluator", "record_schedule", "run_iteration", "run_reuse_search",
    "run_search", "MENU_HEADER", "load_menu", "parse_menu_asset",
    "render_constrained_menu", "render_menu", "build_code_prompt",
    "build_plan_prompt", "load_prompt_asset", "parse_plan_response", "KINDS",
    "TraceWriter", "read_trace", "Ablations", "BeamState", "CallCounts",
    "Candidate", "MenuConfig", "Plan", "Schedule", "ScheduleStep",
    "SearchConfig", "SearchResult", "shared_dims",
]
