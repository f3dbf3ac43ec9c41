"""Numerics for operator layer-cake identities, pretty-good measurements and one-shot packing bounds."""

__version__ = "0.1.0"
