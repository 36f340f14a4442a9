"""Interpolated collision-model generators and diagnostics."""
__version__ = "0.1.0"
