"""Synthion: verification and synthesis workbench for a small functional language."""

__version__ = "0.1.0"
