"""Reward-model runtime for SQL verification prompts.

Serves P(Yes) from a causal language model's label-token logits over a
small HTTP contract, and trains low-rank adapters on record-per-line
labeled datasets.
"""

__version__ = "0.1.0"
