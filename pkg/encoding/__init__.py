"""
Boundary transforms, factorial gap codes, the packing map and the monotone codec.
"""
