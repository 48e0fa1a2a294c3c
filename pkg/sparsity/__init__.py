"""
Covering profiles, box dimension and nullity diagnostics.
"""
