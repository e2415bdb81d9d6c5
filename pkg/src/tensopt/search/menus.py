"""Loading, rendering, and dropout of optimization menus."""

from __future__ import annotations

import re
from importlib import resources

import numpy as np

from .types import MenuConfig

MENU_HEADER = "<optimizations>:"

_MENU_ASSETS = {
    "gemm": "menu_gemm.txt",
    "finegrained": "menu_finegrained.txt",
}

_NUMBERED = re.compile(r"^\s*(\d+)\.\s*(.*\S)\s*$")


def parse_menu_asset(text: str) -> MenuConfig:
    """Parse a numbered menu file into a MenuConfig (numbers discarded)."""
    options = []
    for line in text.splitlines():
        line = line.strip()
        if not line or line == MENU_HEADER:
            continue
        m = _NUMBERED.match(line)
        if not m:
            raise ValueError(f"menu line is not numbered: {line!r}")
        options.append(m.group(2))
    return MenuConfig(options=tuple(options))


def load_menu(kind: str) -> MenuConfig:
    """Load one of the bundled menus: 'gemm' or 'finegrained'."""
    try:
        name = _MENU_ASSETS[kind]
    except KeyError:
        raise ValueError(f"unknown menu kind {kind!r}; expected one of "
                         f"{sorted(_MENU_ASSETS)}") from None
    text = (resources.files("tensopt.assets") / "prompts" / name).read_text()
    return parse_menu_asset(text)


def render_menu(menu: MenuConfig, p: float, rng: np.random.Generator) -> str:
    """Render the menu with each droppable option removed with probability
    ``p``, survivors renumbered consecutively.

    Options in ``always_keep`` are never dropped.  If every droppable
    option is dropped, one of them is redrawn uniformly so the planner
    always sees at least one concrete option (this is the only path at
    p=1).
    """
    if not 0.0 <= p <= 1.0:
        raise ValueError("dropout probability must be in [0, 1]")
    keep = set(menu.always_keep)
    droppable = [opt for opt in menu.options if opt not in keep]
    dropped = {opt for opt in droppable if rng.random() < p}
    if droppable and len(dropped) == len(droppable):
        survivor = droppable[int(rng.integers(len(droppable)))]
        dropped.discard(survivor)
    lines = [MENU_HEADER]
    n = 0
    for opt in menu.options:
        if opt in dropped:
            continue
        n += 1
        lines.append(f"{n}. {opt}")
    return "\n".join(lines)


def render_constrained_menu(option: str, plan_hint: str | None = None) -> str:
    """A single-option menu used when replaying a recorded schedule step."""
    lines = [MENU_HEADER, f"1. {option}"]
    if plan_hint:
        lines.append("")
        lines.append("A plan that worked for this optimization on a "
                     "similar workload:")
        lines.append(plan_hint)
    return "\n".join(lines)
