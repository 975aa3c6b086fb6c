"""Quaternion lattices in PSL(2,R)^d: spherical transforms, orbital
integrals, lattice-point enumeration and trace-formula budgets."""

__version__ = "0.1.0"
