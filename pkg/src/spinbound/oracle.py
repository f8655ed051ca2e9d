"""Exact diagonalization of small Heisenberg models.

Basis states are bit strings with site 1 as the most significant bit and bit 0
meaning spin up (the +1 eigenvector of Z).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .models import ModelSpec
from .moments import LinExpr
from .pauli import CapacityError, PauliMonomial, Phase, sparse_matrix_rep
from .symmetry import MomentKey

DENSE_LIMIT = 10
SPARSE_LIMIT = 16
DEGENERACY_TOL = 1e-9


@dataclass
class GroundState:
    """Ground energy and an orthonormal basis (columns) of the ground space."""

    energy: float
    n_sites: int
    vectors: np.ndarray

    @property
    def degeneracy(self) -> int:
        return self.vectors.shape[1]

    @property
    def energy_per_spin(self) -> float:
        return self.energy / self.n_sites

    @property
    def vector(self) -> np.ndarray:
        return self.vectors[:, 0]


def hamiltonian_matrix(model: ModelSpec) -> sp.csr_matrix:
    n = model.n_sites
    if n > SPARSE_LIMIT:
        raise CapacityError(f"exact diagonalization limited to {SPARSE_LIMIT} sites, got {n}")
    dim = 1 << n
    H = sp.csr_matrix((dim, dim), dtype=complex)
    for c, letters in model.terms():
        H = H + c * sparse_matrix_rep(letters, n)
    return H.real.tocsr()


def diagonalize(model: ModelSpec) -> GroundState:
    """Dense eigensolver up to 10 sites, Lanczos up to 16."""
    H = hamiltonian_matrix(model)
    n = model.n_sites
    if n <= DENSE_LIMIT:
        w, v = np.linalg.eigh(H.toarray())
    else:
        k = 8
        while True:
            w, v = spla.eigsh(H, k=k, which="SA", tol=1e-13, ncv=max(4 * k, 40))
            order = np.argsort(w)
            w, v = w[order], v[:, order]
            if w[-1] - w[0] > DEGENERACY_TOL or k >= 64:
                break
            k *= 2
    e0 = w[0]
    deg = int(np.sum(w - e0 <= DEGENERACY_TOL))
    vecs = v[:, :deg]
    if deg > 1:
        # re-orthonormalize the (possibly slightly mixed) Lanczos vectors
        vecs, _ = np.linalg.qr(vecs)
    return GroundState(float(e0), n, vecs)


def apply_word(letters: Sequence[int], n: int, vecs: np.ndarray, phase: Phase = Phase.ONE) -> np.ndarray:
    """Apply a Pauli word to the columns of ``vecs`` without building a matrix."""
    dim = 1 << n
    idx = np.arange(dim, dtype=np.int64)
    flip = 0
    amp = np.full(dim, complex(phase))
    for c in letters:
        s, ax = c >> 2, c & 3
        if s >= n:
            raise ValueError(f"site {s + 1} outside the {n}-site system")
        bit = n - 1 - s
        b = (idx >> bit) & 1
        if ax == 1:
            flip |= 1 << bit
        elif ax == 2:
            flip |= 1 << bit
            amp = amp * (1j * (1 - 2 * b))
        else:
            amp = amp * (1 - 2 * b)
    out = np.zeros(vecs.shape, dtype=complex)
    out[idx ^ flip] = amp[:, None] * vecs if vecs.ndim == 2 else amp * vecs
    return out


def _word_expectation(gs: GroundState, letters: Sequence[int], phase: Phase = Phase.ONE) -> complex:
    """Trace of the word against the normalized ground-space projector."""
    v = gs.vectors
    wv = apply_word(letters, gs.n_sites, v, phase)
    return complex(np.sum(v.conj() * wv) / gs.degeneracy)


def expectation(gs: GroundState, obs: LinExpr | PauliMonomial | Sequence) -> float:
    """Ground-space average of a LinExpr, a monomial or raw (coef, letters) terms."""
    if isinstance(obs, PauliMonomial):
        val = _word_expectation(gs, obs.letters, obs.phase)
    elif isinstance(obs, LinExpr):
        val = obs.constant + sum(c * _word_expectation(gs, k.letters) for k, c in obs.terms.items())
    else:
        val = sum(c * _word_expectation(gs, letters) for c, letters in obs)
    if abs(val.imag) > 1e-10:
        raise ValueError(f"observable has imaginary expectation {val.imag:.3g}; it is not self-adjoint")
    return float(val.real)


def moment_values(gs: GroundState, keys: Sequence[MomentKey]) -> dict[MomentKey, float]:
    """Expectation of each key's representative word (zero-flagged keys give 0)."""
    return {k: (0.0 if k.zero else _word_expectation(gs, k.letters).real) for k in keys}


def moment_vector(gs: GroundState, keys: Sequence[MomentKey]) -> np.ndarray:
    vals = moment_values(gs, keys)
    return np.array([1.0] + [vals[k] for k in keys])
