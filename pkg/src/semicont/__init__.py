"""Semicontinuity bounds for entropy, entanglement of formation and equivocation,
with brute-force oracles and Monte-Carlo validity campaigns."""

__version__ = "0.1.0"
