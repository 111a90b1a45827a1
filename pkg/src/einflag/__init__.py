"""Existence machinery for invariant Einstein metrics on compact homogeneous spaces."""

__version__ = "0.1.0"
