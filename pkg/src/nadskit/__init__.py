"""Simulated TSN backbone traffic with labelled anomalies, and a NADS evaluation pipeline."""

__version__ = "0.1.0"
