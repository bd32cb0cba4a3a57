"""Deterministic, explainable restaurant-concierge dialog engine."""

__version__ = "0.1.0"
