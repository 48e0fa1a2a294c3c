"""
Deterministic report and data writers.
"""
