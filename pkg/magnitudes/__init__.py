"""
Certified exponentials, psi iterates, tower magnitudes and gap sequences.
"""
