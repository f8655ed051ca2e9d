"""Symbolic arithmetic in the N-site Pauli algebra.

A monomial is stored in normal form: a phase in {1, i, -1, -i} times a product of
single-site Pauli letters on strictly increasing sites.  Letters are packed into
integers ``4 * site + axis`` (axis 1, 2, 3 for x, y, z), so a sorted tuple of codes
is sorted by site first and compares lexicographically on (site, axis).
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .geometry import Lattice, LatticeError

X, Y, Z = 1, 2, 3
AXIS_NAMES = {X: "X", Y: "Y", Z: "Z"}
AXIS_CODES = {"X": X, "Y": Y, "Z": Z, "x": X, "y": Y, "z": Z}

MAX_DENSE_SITES = 14


class CapacityError(ValueError):
    """Raised when a request would exceed a hard size limit."""


class Phase(enum.IntEnum):
    """Exact phase i**k, stored by its exponent k mod 4."""

    ONE = 0
    I = 1
    MINUS_ONE = 2
    MINUS_I = 3

    def __mul__(self, other):
        if isinstance(other, Phase):
            return Phase((self.value + other.value) % 4)
        return NotImplemented

    def conjugate(self) -> "Phase":
        return Phase((-self.value) % 4)

    @property
    def is_real(self) -> bool:
        return self.value % 2 == 0

    def __complex__(self) -> complex:
        return (1 + 0j, 1j, -1 + 0j, -1j)[self.value]

    @property
    def sign(self) -> int:
        """+1 or -1 for the real phases; for imaginary ones the sign of the i-coefficient."""
        return 1 if self.value in (0, 1) else -1

    def __str__(self) -> str:
        return ("+", "+i", "-", "-i")[self.value]


def _site_product(a: int, b: int) -> tuple[int, int]:
    """Single-site product sigma^a sigma^b = i**k sigma^c, returned as (k, c); c = 0 is identity."""
    if a == b:
        return 0, 0
    c = 6 - a - b
    # cyclic order x -> y -> z -> x gives +i
    return (1 if (b - a) % 3 == 1 else 3), c


_SITE_TABLE = {(a, b): _site_product(a, b) for a in (1, 2, 3) for b in (1, 2, 3)}


def mul_codes(a: tuple[int, ...], b: tuple[int, ...]) -> tuple[int, tuple[int, ...]]:
    """Multiply two normal-form letter tuples; returns (phase exponent, letters).

    Merges the two sorted lists and resolves same-site collisions with the
    single-site table.
    """
    if not a:
        return 0, b
    if not b:
        return 0, a
    out = []
    k = 0
    i = j = 0
    na, nb = len(a), len(b)
    while i < na and j < nb:
        ca, cb = a[i], b[j]
        sa, sb = ca >> 2, cb >> 2
        if sa < sb:
            out.append(ca)
            i += 1
        elif sb < sa:
            out.append(cb)
            j += 1
        else:
            dk, c = _SITE_TABLE[(ca & 3, cb & 3)]
            k += dk
            if c:
                out.append((sa << 2) | c)
            i += 1
            j += 1
    if i < na:
        out.extend(a[i:])
    if j < nb:
        out.extend(b[j:])
    return k % 4, tuple(out)


def commutes(a: tuple[int, ...], b: tuple[int, ...]) -> bool:
    """True when two Pauli words commute (an even number of anticommuting sites)."""
    i = j = 0
    n = 0
    while i < len(a) and j < len(b):
        sa, sb = a[i] >> 2, b[j] >> 2
        if sa < sb:
            i += 1
        elif sb < sa:
            j += 1
        else:
            if (a[i] & 3) != (b[j] & 3):
                n += 1
            i += 1
            j += 1
    return n % 2 == 0


def axis_counts(codes: Iterable[int]) -> tuple[int, int, int]:
    n = [0, 0, 0, 0]
    for c in codes:
        n[c & 3] += 1
    return n[1], n[2], n[3]


@dataclass(frozen=True)
class Signature:
    """Parities of the sign flips: ``xi`` for the model flips s_xy, s_yz, s_zx and
    ``eta`` for the Hamiltonian flips t_x, t_y, t_z."""

    xi: tuple[int, int, int]
    eta: tuple[int, int, int]

    @classmethod
    def from_counts(cls, nx: int, ny: int, nz: int) -> "Signature":
        p = lambda n: -1 if n % 2 else 1
        return cls(
            xi=(p(nx + ny), p(ny + nz), p(nz + nx)),
            eta=(p(nx), p(ny), p(nz)),
        )

    @property
    def block(self) -> int:
        """Index 1..4 of the sign-symmetry sub-basis."""
        return {(1, 1, 1): 1, (1, -1, -1): 2, (-1, 1, -1): 3, (-1, -1, 1): 4}[self.xi]


@dataclass(frozen=True)
class PauliMonomial:
    letters: tuple[int, ...]
    lattice: Lattice
    phase: Phase = Phase.ONE

    # ---- construction ----
    @classmethod
    def identity(cls, lattice: Lattice) -> "PauliMonomial":
        return cls((), lattice)

    @classmethod
    def from_letters(cls, lattice: Lattice, pairs: Iterable[tuple[int, int]],
                     phase: Phase = Phase.ONE) -> "PauliMonomial":
        """Build from (site, axis) pairs in any order; same-site letters are multiplied out."""
        out: tuple[int, ...] = ()
        k = phase.value
        for site, axis in pairs:
            if not 0 <= site < lattice.n_sites:
                raise LatticeError(f"site {site} outside {lattice}")
            dk, out = mul_codes(out, ((site << 2) | axis,))
            k += dk
        return cls(out, lattice, Phase(k % 4))

    @classmethod
    def parse(cls, text: str, lattice: Lattice) -> "PauliMonomial":
        """Parse the text rendering, e.g. ``"+i X1 Z3"``, ``"X(2,3) Y(2,4)"`` or ``"1"``."""
        tokens = text.split()
        phase = Phase.ONE
        if tokens and tokens[0] in ("+", "-", "+i", "-i", "i"):
            phase = {"+": Phase.ONE, "-": Phase.MINUS_ONE, "+i": Phase.I,
                     "i": Phase.I, "-i": Phase.MINUS_I}[tokens.pop(0)]
        pairs = []
        for tok in tokens:
            if tok in ("1", "I"):
                continue
            m = re.fullmatch(r"([XYZxyz])\(?(\d+)(?:,(\d+))?\)?", tok)
            if m is None:
                raise ValueError(f"cannot parse Pauli letter {tok!r}")
            coords = [int(g) for g in m.groups()[1:] if g is not None]
            pairs.append((lattice.site(*coords), AXIS_CODES[m.group(1)]))
        return cls.from_letters(lattice, pairs, phase)

    # ---- properties ----
    @property
    def degree(self) -> int:
        return len(self.letters)

    @property
    def sites(self) -> tuple[int, ...]:
        return tuple(c >> 2 for c in self.letters)

    @property
    def axes(self) -> tuple[int, ...]:
        return tuple(c & 3 for c in self.letters)

    def phase_free(self) -> "PauliMonomial":
        return PauliMonomial(self.letters, self.lattice)

    # ---- algebra ----
    def __mul__(self, other: "PauliMonomial") -> "PauliMonomial":
        return multiply(self, other)

    def adjoint(self) -> "PauliMonomial":
        return adjoint(self)

    def signature(self) -> Signature:
        return signature(self)

    def __str__(self) -> str:
        body = " ".join(AXIS_NAMES[c & 3] + self.lattice.label(c >> 2) for c in self.letters)
        body = body or "1"
        if self.phase is Phase.ONE:
            return body
        return f"{self.phase} {body}"

    def __repr__(self) -> str:
        return f"PauliMonomial({str(self)!r}, {self.lattice})"


def multiply(a: PauliMonomial, b: PauliMonomial) -> PauliMonomial:
    if a.lattice != b.lattice:
        raise LatticeError(f"cannot multiply monomials on {a.lattice} and {b.lattice}")
    k, letters = mul_codes(a.letters, b.letters)
    return PauliMonomial(letters, a.lattice, Phase((a.phase + b.phase + k) % 4))


def adjoint(a: PauliMonomial) -> PauliMonomial:
    # distinct-site words are self-adjoint, only the phase conjugates
    return PauliMonomial(a.letters, a.lattice, a.phase.conjugate())


def signature(a: PauliMonomial) -> Signature:
    return Signature.from_counts(*axis_counts(a.letters))


_PAULI = {
    0: np.eye(2, dtype=complex),
    X: np.array([[0, 1], [1, 0]], dtype=complex),
    Y: np.array([[0, -1j], [1j, 0]], dtype=complex),
    Z: np.array([[1, 0], [0, -1]], dtype=complex),
}


def _local_factors(letters: Sequence[int], n: int) -> list[int]:
    axes = [0] * n
    for c in letters:
        s = c >> 2
        if s >= n:
            raise LatticeError(f"site {s + 1} outside the first {n} sites")
        axes[s] = c & 3
    return axes


def matrix_rep(a: PauliMonomial, n: int) -> np.ndarray:
    """Dense 2**n representation; site 1 is the leftmost tensor factor."""
    if n > MAX_DENSE_SITES:
        raise CapacityError(f"dense representation limited to {MAX_DENSE_SITES} sites, got {n}")
    out = np.array([[complex(a.phase)]])
    for ax in _local_factors(a.letters, n):
        out = np.kron(out, _PAULI[ax])
    return out


def sparse_matrix_rep(letters: Sequence[int], n: int, phase: Phase = Phase.ONE) -> sp.csr_matrix:
    """Sparse 2**n representation of a Pauli word, built directly from bit masks."""
    dim = 1 << n
    idx = np.arange(dim, dtype=np.int64)
    flip = 0
    vals = np.full(dim, complex(phase))
    for c in letters:
        s, ax = c >> 2, c & 3
        bit = n - 1 - s
        b = (idx >> bit) & 1
        if ax == X:
            flip |= 1 << bit
        elif ax == Y:
            flip |= 1 << bit
            # <1-b| Y |b> = i (-1)^b ... as a column map Y|b> = i(-1)^b |1-b>
            vals = vals * (1j * (1 - 2 * b))
        else:
            vals = vals * (1 - 2 * b)
    # column b maps to row b ^ flip
    return sp.csr_matrix((vals, (idx ^ flip, idx)), shape=(dim, dim))
