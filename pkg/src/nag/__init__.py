"""Encoder-free text-graph modeling inside a small decoder-only transformer."""

__version__ = "0.1.0"
