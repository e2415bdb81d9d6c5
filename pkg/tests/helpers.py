"""Mock search machinery shared by the beam-search and acceptance tests.

The mock backend emits tiny but fully valid kernels whose only payload is
an integer tag, and the mock evaluator assigns each distinct program a
deterministic pseudo-random verdict derived from its canonical hash.  That
exercises every admission path (parse failures, incorrect programs,
non-improving programs, duplicates) without touching the simulator.
"""

import hashlib

import numpy as np

from tensopt.llm import Completion
from tensopt.search import MenuConfig, canonical_hash
from tensopt.verify import Verdict

ROOT_LATENCY = 1 << 20


def tiny_source(tag: int) -> str:
    return (
        "void test(int8_t out[1][1]) {\n"
        f"  out[0][0] = {tag};\n"
        "}\n"
    )


ROOT_SOURCE = tiny_source(0)


def small_menu() -> MenuConfig:
    return MenuConfig(options=(
        "hoist redundant operations out of loops",
        "double buffering",
        "loop unrolling",
        "other methods not listed here.",
    ))


class MockSearchBackend:
    """Serves plan/code completions from a seeded random stream."""

    def __init__(self, menu: MenuConfig, seed: int, n_tags: int = 24,
                 p_no_code: float = 0.1):
        self.menu = menu
        self.rng = np.random.default_rng([seed, 77])
        self.n_tags = n_tags
        self.p_no_code = p_no_code
        self.calls = {"plan": 0, "code": 0}

    def complete(self, prompt: str, phase: str) -> Completion:
        self.calls[phase] += 1
        if phase == "plan":
            opt = self.menu.options[int(self.rng.integers(len(self.menu.options)))]
            return Completion(text=f"OPTIMIZATION: {opt}\napply it directly",
                              model="mock")
        if self.rng.random() < self.p_no_code:
            return Completion(text="I would rather not.", model="mock")
        tag = 1 + int(self.rng.integers(self.n_tags))
        return Completion(text=f"```\n{tiny_source(tag)}\n```", model="mock")


def hash_verdict(prog, root_hash: str, p_incorrect: float = 0.3) -> Verdict:
    """Deterministic verdict keyed on the program's canonical hash."""
    h = canonical_hash(prog)
    if h == root_hash:
        return Verdict(correct=True, trials_run=1, latency_cycles=ROOT_LATENCY)
    digest = hashlib.sha256(h.encode()).hexdigest()
    u = int(digest[:8], 16) / 0xFFFFFFFF
    if u < p_incorrect:
        return Verdict(correct=False, trials_run=1)
    latency = 1 + int(digest[8:16], 16) % (2 * ROOT_LATENCY)
    return Verdict(correct=True, trials_run=1, latency_cycles=latency)


def make_mock_evaluator(root_source: str = ROOT_SOURCE,
                        p_incorrect: float = 0.3):
    from tensopt.dsl import parse_kernel

    prog, diags = parse_kernel(root_source)
    assert prog is not None, diags
    root_hash = canonical_hash(prog)

    def evaluate(prog, code_text):
        return hash_verdict(prog, root_hash, p_incorrect)

    return evaluate
