"""Miniature EAM molecular dynamics for edge-crack propagation in FCC nickel."""

__version__ = "0.1.0"
