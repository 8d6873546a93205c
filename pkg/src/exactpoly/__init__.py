"""Polynomial expansions of activation functions with exact error control,
plus the two network-analysis procedures built on them: coefficient-space
equivalence testing and verified output-range bounding."""

__version__ = "0.1.0"
