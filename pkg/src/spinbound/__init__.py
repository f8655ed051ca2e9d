"""Symmetry-reduced moment relaxations for Heisenberg spin models.

Builds the sign, translation and axis-permutation reduced moment SDP, solves it
for certified lower bounds on the ground energy (and two-sided bounds on
observables), and cross-checks small systems against exact diagonalization.
"""
from .config import ConfigError, RelaxationConfig
from .models import ModelSpec, hamiltonian, observable
from .oracle import diagonalize, expectation
from .pauli import PauliMonomial, adjoint, matrix_rep, multiply, signature
from .relaxation import assemble, block_ledger
from .sdp import Solution, bound_energy, bound_observable, export_sdpa, import_sdpa, solve

__all__ = [
    "ConfigError", "RelaxationConfig", "ModelSpec", "hamiltonian", "observable", "diagonalize",
    "expectation", "PauliMonomial", "adjoint", "matrix_rep", "multiply", "signature", "assemble",
    "block_ledger", "Solution", "bound_energy", "bound_observable", "export_sdpa", "import_sdpa", "solve",
]
