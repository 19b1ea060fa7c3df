"""Narrative planning with intentional characters, by compilation to
classical planning."""

__version__ = "0.1.0"
