"""Deterministic space-air-ground edge computing simulator and the
decision stack that runs on it.

Modules are imported explicitly; see the README's layout table for the
map. Everything downstream of a config and a seed reproduces exactly.
"""

__version__ = "0.1.0"
