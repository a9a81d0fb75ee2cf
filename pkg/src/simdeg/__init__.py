"""simdeg: numerical laboratory for similarity theory on finite groups and matrix algebras."""

__version__ = "0.1.0"
