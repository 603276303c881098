"""
Robust federated inference toolkit.
"""

__version__ = "1.0.0"
