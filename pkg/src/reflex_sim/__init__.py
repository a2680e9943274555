"""Deterministic tendon-driven arm simulation with stretch-reflex control."""

__version__ = "0.1.0"
