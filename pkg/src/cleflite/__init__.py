"""Clef-lite: dimensional inference, escape analysis and representation selection."""

__version__ = "0.1.0"
