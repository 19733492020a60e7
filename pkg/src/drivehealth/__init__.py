"""Interpretable survival and classification trees for drive SMART telemetry."""

__version__ = "0.1.0"
