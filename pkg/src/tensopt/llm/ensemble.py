"""Round-robin dispatch of samples across several model backends."""

from __future__ import annotations

from .base import Backend, Completion, ensemble_assign


class EnsembleBackend:
    """Spreads a batch of samples across member backends.

    Assignment is positional: sample *i* of a batch of *n* goes to member
    ``i % len(members)``, so per-model counts never differ by more than
    one and a single-member ensemble degenerates to that model alone.
    """

    def __init__(self, members: list[Backend]):
        if not members:
            raise ValueError("ensemble needs at least one member backend")
        self.members = list(members)

    def __len__(self) -> int:
        return len(self.members)

    def assign(self, n_samples: int) -> list[int]:
        return ensemble_assign(n_samples, len(self.members))

    def complete(self, prompt: str, phase: str,
                 sample_index: int = 0) -> Completion:
        return self.members[sample_index % len(self.members)].complete(
            prompt, phase)
