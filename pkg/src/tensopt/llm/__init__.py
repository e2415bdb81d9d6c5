"""Text-completion backends: live OpenAI-compatible HTTP, scripted replay."""

from .base import (DEFAULT_IN_FLIGHT, DEFAULT_KEY_ENV, Backend, Completion,
                   CompletionError, ModelSpec, ensemble_assign)
from .ensemble import EnsembleBackend
from .openai_client import OpenAIBackend
from .scripted import ScriptEntry, ScriptManifest, ScriptedBackend

__all__ = [
    "DEFAULT_IN_FLIGHT", "DEFAULT_KEY_ENV", "Backend", "Completion",
    "CompletionError", "ModelSpec", "ensemble_assign", "EnsembleBackend",
    "OpenAIBackend", "ScriptEntry", "ScriptManifest", "ScriptedBackend",
]
