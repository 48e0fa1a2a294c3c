"""
Corner cells, their symmetry groups and finite-level audits.
"""
