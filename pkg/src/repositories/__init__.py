"""
Repository layer for datasets, checkpoints and reports.
"""
