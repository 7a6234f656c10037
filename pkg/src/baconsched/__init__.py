"""Constant-weight detectors for the Bacon-Shor code via a period-4 measurement schedule."""

__version__ = "0.1.0"
