"""
Service layer: synthetic data, attacks, training, evaluation and self-test.
"""
