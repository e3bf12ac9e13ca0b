"""Causal-decoherence analysis of finite-dimensional unitary interactions and circuits."""

__version__ = "0.1.0"
