"""Hamiltonian-simulation compiler: model language, operator IR, Trotter and
analogue back ends, and an exact-evolution oracle for benchmarking."""

__version__ = "0.1.0"
