"""
Level sets of Cantor systems and gap-encoded sets.
"""
