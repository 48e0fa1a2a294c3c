"""
Run and system metrics.
"""
