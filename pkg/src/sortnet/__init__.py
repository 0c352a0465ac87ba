"""Construct, verify, enumerate and SAT-search comparator networks."""

__version__ = "0.1.0"
