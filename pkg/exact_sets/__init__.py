"""
Exact scalars, interval sets and covering numbers.
"""
