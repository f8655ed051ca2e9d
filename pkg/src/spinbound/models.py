"""Heisenberg Hamiltonians on rings and square tori and the correlation observables."""
from __future__ import annotations

import re
from dataclasses import dataclass

from .geometry import Lattice, LatticeError
from .moments import LinExpr
from .symmetry import SymmetryGroup

FAMILIES = ("chain", "chain-j1j2", "square", "square-j1j2")
OBSERVABLES = ("c1", "c2", "cmax", "spipi")

RawTerm = tuple[float, tuple[int, ...]]


@dataclass(frozen=True)
class ModelSpec:
    """A Heisenberg model ``1/4 sum_a (sum_nn s^a s^a + J2 sum_nnn s^a s^a)``.

    ``J2`` only enters the j1j2 families.
    """

    family: str
    L: int
    J2: float = 0.0

    def __post_init__(self):
        family = self.family.lower()
        object.__setattr__(self, "family", family)
        if family not in FAMILIES:
            raise ValueError(f"unknown model family {self.family!r}; expected one of {FAMILIES}")
        if not (self.J2 == self.J2 and abs(self.J2) != float("inf")):
            raise ValueError(f"J2 must be finite, got {self.J2}")
        if self.L < 3:
            raise LatticeError(f"{family} needs L >= 3, got {self.L}")

    @property
    def lattice(self) -> Lattice:
        return Lattice(2 if self.family.startswith("square") else 1, self.L)

    @property
    def n_sites(self) -> int:
        return self.lattice.n_sites

    @property
    def has_j2(self) -> bool:
        return self.family.endswith("j1j2")

    def bonds(self) -> list[tuple[int, int, float]]:
        """(site, site, coupling) for every bond of the lattice sum, repeats included."""
        lat = self.lattice
        L = self.L
        out = []
        if lat.dim == 1:
            for i in range(L):
                out.append((i, (i + 1) % L, 1.0))
            if self.has_j2:
                for i in range(L):
                    out.append((i, (i + 2) % L, self.J2))
        else:
            for i in range(L):
                for j in range(L):
                    s = lat.index((i, j))
                    out.append((s, lat.index((i + 1, j)), 1.0))
                    out.append((s, lat.index((i, j + 1)), 1.0))
                    if self.has_j2:
                        out.append((s, lat.index((i + 1, j + 1)), self.J2))
                        out.append((s, lat.index((i + 1, j - 1)), self.J2))
        return out

    def raw_terms(self) -> list[RawTerm]:
        """Unmerged (coefficient, letters) terms, three per bond."""
        out = []
        for a, b, J in self.bonds():
            lo, hi = min(a, b), max(a, b)
            for ax in (1, 2, 3):
                out.append((0.25 * J, ((lo << 2) | ax, (hi << 2) | ax)))
        return out

    def terms(self) -> list[RawTerm]:
        """Terms with equal words merged and zero couplings dropped, in first-seen order."""
        merged: dict[tuple[int, ...], float] = {}
        for c, letters in self.raw_terms():
            merged[letters] = merged.get(letters, 0.0) + c
        return [(c, w) for w, c in merged.items() if c != 0]

    def __str__(self) -> str:
        extra = f", J2={self.J2:g}" if self.has_j2 else ""
        return f"{self.family}(L={self.L}{extra})"


def canonical_expr(terms: list[RawTerm], group: SymmetryGroup) -> LinExpr:
    out = LinExpr()
    for c, letters in terms:
        out.add_term(group.key_of(letters), c)
    return out


def hamiltonian(model: ModelSpec, group: SymmetryGroup) -> LinExpr:
    """The energy ``l(H)`` as a combination of canonical moment keys."""
    return canonical_expr(model.raw_terms(), group)


def observable_terms(model: ModelSpec, name: str) -> list[RawTerm]:
    """Raw terms of a named observable: ``cj`` (distance-j correlation along the
    first axis), ``cmax`` (maximal distance) or ``spipi`` (staggered structure factor)."""
    lat = model.lattice
    L = model.L
    name = name.lower()
    m = re.fullmatch(r"c(\d+)", name)
    if m:
        j = int(m.group(1))
        if not 1 <= j <= L // 2:
            raise ValueError(f"correlation distance must be in 1..{L // 2}, got {j}")
        other = lat.index((j,)) if lat.dim == 1 else lat.index((0, j))
        return [(0.25, (1, (other << 2) | 1))]
    if name == "cmax":
        if L % 2:
            raise ValueError("cmax needs even L")
        other = lat.index((L // 2,)) if lat.dim == 1 else lat.index((L // 2, L // 2))
        return [(0.25, (1, (other << 2) | 1))]
    if name == "spipi":
        if L % 2:
            raise ValueError("spipi needs even L")
        n = lat.n_sites
        scale = 1.0 / (4 * n * n)
        out = [(3 * n * scale, ())]
        for s in range(n):
            for t in range(n):
                if s == t:
                    continue
                sign = (-1) ** (sum(lat.coords(s)) + sum(lat.coords(t)))
                lo, hi = min(s, t), max(s, t)
                for ax in (1, 2, 3):
                    out.append((sign * scale, ((lo << 2) | ax, (hi << 2) | ax)))
        return out
    raise ValueError(f"unknown observable {name!r}; expected cj, cmax or spipi")


def observable(model: ModelSpec, name: str, group: SymmetryGroup) -> LinExpr:
    return canonical_expr(observable_terms(model, name), group)
