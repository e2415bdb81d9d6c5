"""tensopt: kernel DSL, accelerator simulator, verification and LLM-driven
optimization search for a decoupled systolic-array accelerator."""

__version__ = "0.1.0"
