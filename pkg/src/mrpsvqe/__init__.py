"""Fragment-embedded VQE toolkit: HEA fragment states, multireference
product states, and inter-fragment (qubit-/fermionic-)ADAPT-VQE, verified
against an exact-diagonalization oracle."""

__version__ = "0.1.0"
