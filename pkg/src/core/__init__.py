"""
Core domain types, numerical kernels, aggregation rules and attacks.
"""
