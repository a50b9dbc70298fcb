"""Sampler and verification lab for uniform bipartite planar maps with a
prescribed face-degree sequence and boundary length."""

__version__ = "0.1.0"
