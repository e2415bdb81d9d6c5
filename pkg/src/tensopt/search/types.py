"""Core data shapes for the plan-then-code beam search."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..dsl import KernelProgram
from ..llm import ModelSpec
from ..verify import Verdict


@dataclass(frozen=True)
class MenuConfig:
    """An ordered list of optimization options shown to the planner.

    ``always_keep`` options are exempt from dropout (by default the final
    catch-all line), so the planner always has an escape hatch.
    """

    options: tuple[str, ...]
    always_keep: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.options:
            raise ValueError("menu needs at least one option")
        keep = self.always_keep or (self.options[-1],)
        for opt in keep:
            if opt not in self.options:
                raise ValueError(f"always_keep option {opt!r} is not on the "
                                 "menu")
        object.__setattr__(self, "always_keep", tuple(keep))


@dataclass(frozen=True)
class Ablations:
    """Feature switches for the component-removal experiments."""

    include_isa: bool = True
    include_menu: bool = True
    include_feedback: bool = True
    enable_dropout: bool = True
    enable_ensemble: bool = True


@dataclass(frozen=True)
class SearchConfig:
    """Search hyperparameters plus the prompt assets they act on."""

    menu: MenuConfig
    beam_width: int = 6
    plans_per_element: int = 6
    codes_per_plan: int = 2
    iterations: int = 15
    dropout_prob: float = 0.7
    rules: str = ""
    isa_text: str = ""
    icl_tiling: str = ""
    accel_summary: str = ""
    models: tuple[ModelSpec, ...] = ()
    ablations: Ablations = field(default_factory=Ablations)
    seed: int = 0

    def __post_init__(self):
        for name in ("beam_width", "plans_per_element", "codes_per_plan"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.iterations < 0:
            raise ValueError("iterations must be non-negative")
        if not 0.0 <= self.dropout_prob <= 1.0:
            raise ValueError("dropout_prob must be in [0, 1]")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


@dataclass(frozen=True)
class Plan:
    """A parsed planning response: which option it chose, and the plan."""

    menu_option: str
    plan_text: str
    raw_response: str


@dataclass(frozen=True)
class Candidate:
    """One program in the search tree, with its verification verdict."""

    id: str
    code_text: str
    ast: KernelProgram
    verdict: Verdict
    code_hash: str
    parent_id: str | None = None
    plan: Plan | None = None
    iteration_found: int = 0
    discovery_index: int = 0
    feedback: str = ""  # rendered performance line for planning prompts

    @property
    def latency(self) -> int:
        if self.verdict.latency_cycles is None:
            raise ValueError(f"candidate {self.id} has no measured latency")
        return self.verdict.latency_cycles


@dataclass(frozen=True)
class BeamState:
    """The beam after one selection round."""

    iteration: int
    members: tuple[Candidate, ...]
    best: Candidate

    def __post_init__(self):
        hashes = [c.code_hash for c in self.members]
        if len(set(hashes)) != len(hashes):
            raise ValueError("beam members must have distinct code hashes")


@dataclass(frozen=True)
class ScheduleStep:
    """One applied optimization and the latency change it produced."""

    menu_option: str
    plan_text: str
    latency_before: int
    latency_after: int


@dataclass(frozen=True)
class Schedule:
    """The root-to-best chain of applied optimizations."""

    steps: tuple[ScheduleStep, ...]
    fingerprint: dict

    def __post_init__(self):
        for s in self.steps:
            if s.latency_after >= s.latency_before:
                raise ValueError("schedule latencies must strictly decrease")
        for a, b in zip(self.steps, self.steps[1:]):
            if b.latency_before != a.latency_after:
                raise ValueError("schedule steps must chain "
                                 "(latency_before[i+1] == latency_after[i])")

    def to_json(self) -> dict:
        return {"fingerprint": self.fingerprint,
                "steps": [{"menu_option": s.menu_option,
                           "plan_text": s.plan_text,
                           "latency_before": s.latency_before,
                           "latency_after": s.latency_after}
                          for s in self.steps]}

    @classmethod
    def from_json(cls, data: dict) -> "Schedule":
        steps = tuple(ScheduleStep(menu_option=s["menu_option"],
                                   plan_text=s["plan_text"],
                                   latency_before=int(s["latency_before"]),
                                   latency_after=int(s["latency_after"]))
                      for s in data["steps"])
        return cls(steps=steps, fingerprint=dict(data["fingerprint"]))


@dataclass
class CallCounts:
    """LLM call accounting, split by phase and (for reuse runs) by stage."""

    plan: int = 0
    code: int = 0
    reuse_plan: int = 0
    reuse_code: int = 0

    @property
    def total(self) -> int:
        return self.plan + self.code + self.reuse_plan + self.reuse_code

    def to_json(self) -> dict:
        return {"plan": self.plan, "code": self.code,
                "reuse_plan": self.reuse_plan, "reuse_code": self.reuse_code,
                "total": self.total}


@dataclass
class SearchResult:
    """Everything a search run produced."""

    best: Candidate
    schedule: Schedule
    beams: list[BeamState]
    candidates: dict[str, Candidate]
    calls: CallCounts
    curve: list[dict] = field(default_factory=list)


def shared_dims(fp_a: dict, fp_b: dict) -> int:
    """How many named dimensions two workload fingerprints agree on.

    Used to judge whether a recorded schedule plausibly transfers; callers
    typically warn below two shared dimensions.
    """
    da = fp_a.get("dims", {})
    db = fp_b.get("dims", {})
    return sum(1 for k, v in da.items() if k in db and db[k] == v)
