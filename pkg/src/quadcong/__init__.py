"""Quadratic congruence sums: root counting, Weyl forms, binary quadratic forms,
Hecke congruence groups and the Poincare-series side of the Weyl sum."""

__version__ = "0.1.0"
