"""Prompt assembly for the two generation phases, and response parsing.

Both prompts are rendered from plain-text templates with {{PLACEHOLDER}}
slots.  Ablation switches blank out exactly one section each; blank-line
runs left behind by removed sections are collapsed so rendered prompts are
stable byte-for-byte.
"""

from __future__ import annotations

import re
from importlib import resources

import numpy as np

from .menus import render_constrained_menu, render_menu
from .types import Candidate, MenuConfig, Plan, SearchConfig

_BLANKS = re.compile(r"\n{3,}")
_HEADER = re.compile(r"^\s*OPTIMIZATION\s*:\s*(.+?)\s*$",
                     re.IGNORECASE | re.MULTILINE)
_LEADING_NUMBER = re.compile(r"^\s*\d+\.\s*")


def load_prompt_asset(name: str) -> str:
    return (resources.files("tensopt.assets") / "prompts" / name).read_text()


def _render(template: str, slots: dict[str, str]) -> str:
    out = template
    for key, value in slots.items():
        out = out.replace("{{" + key + "}}", value)
    return _BLANKS.sub("\n\n", out).strip() + "\n"


def _feedback_section(cand: Candidate, sc: SearchConfig) -> str:
    if not sc.ablations.include_feedback or not cand.feedback:
        return ""
    return "Feedback from running the current program:\n" + cand.feedback


def build_plan_prompt(cand: Candidate, sc: SearchConfig,
                      rng: np.random.Generator,
                      reuse_constraint: str | None = None,
                      reuse_hint: str | None = None) -> str:
    """Phase-1 prompt: pick one menu option and describe the transformation.

    ``reuse_constraint`` replaces the menu with that single option (plus an
    optional recorded-plan hint) when replaying a schedule step.
    """
    template = load_prompt_asset("plan_template.txt")
    ab = sc.ablations
    if reuse_constraint is not None:
        menu = render_constrained_menu(reuse_constraint, reuse_hint)
    elif ab.include_menu:
        p = sc.dropout_prob if ab.enable_dropout else 0.0
        menu = render_menu(sc.menu, p, rng)
    else:
        menu = ""
    summary = sc.accel_summary.strip()
    text = _render(template, {
        "ISA": sc.isa_text if ab.include_isa else "",
        "CODE": cand.code_text.strip(),
        "FEEDBACK": _feedback_section(cand, sc),
        "MENU": menu,
        "ACCEL_SUMMARY": summary + "\n" if summary else "",
        "RULES": sc.rules,
    })
    if not menu:
        text = text.replace("Select one optimization from the list above",
                            "Select one optimization")
    return text


def build_code_prompt(cand: Candidate, plan: Plan, sc: SearchConfig) -> str:
    """Phase-2 prompt: apply the plan, emit the full rewritten program.

    The worked tiling example is included exactly when the plan involves
    tiling (case-insensitive match on the option or the plan text).
    """
    template = load_prompt_asset("code_template.txt")
    needle = (plan.menu_option + " " + plan.plan_text).lower()
    summary = sc.accel_summary.strip()
    return _render(template, {
        "ISA": sc.isa_text if sc.ablations.include_isa else "",
        "CODE": cand.code_text.strip(),
        "PLAN": plan.raw_response.strip(),
        "ICL": sc.icl_tiling if "tiling" in needle else "",
        "ACCEL_SUMMARY": summary + "\n" if summary else "",
        "RULES": sc.rules,
    })


def _normalize_option(text: str) -> str:
    return _LEADING_NUMBER.sub("", text).strip().rstrip(".").lower()


def parse_plan_response(response: str, menu: MenuConfig) -> Plan:
    """Extract the chosen menu option and plan text from a response.

    The expected form is a first line ``OPTIMIZATION: <menu line>``.  If
    the header is missing or names nothing on the menu, the response body
    is scanned for a menu option quoted verbatim (longest options first so
    overlapping phrasings resolve deterministically); if nothing matches,
    the plan is tagged "other".
    """
    by_norm = {_normalize_option(opt): opt for opt in menu.options}
    option = None
    plan_text = response.strip()
    m = _HEADER.search(response)
    if m:
        claimed = _normalize_option(m.group(1))
        option = by_norm.get(claimed)
        tail = response[m.end():].strip()
        if tail:
            plan_text = tail
    if option is None:
        low = response.lower()
        for opt in sorted(menu.options, key=len, reverse=True):
            if _normalize_option(opt) in low:
                option = opt
                break
    if option is None:
        option = "other"
    return Plan(menu_option=option, plan_text=plan_text,
                raw_response=response)
