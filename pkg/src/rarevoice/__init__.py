"""Rare-class active-learning workbench for skewed comment corpora."""

__version__ = "0.1.0"
