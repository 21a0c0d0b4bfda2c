"""Optimal measurement design and estimation for qubit and generalized Pauli channels."""

__version__ = "0.1.0"
