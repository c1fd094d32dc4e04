"""Batch harness for candidate SQL pools: generation, execution-equivalence
labeling, dataset synthesis, and best-of-N selection with EX / Pass@N metrics."""

__version__ = "0.1.0"
