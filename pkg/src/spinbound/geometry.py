"""Periodic lattices (rings and square tori) and their site labelling.

Sites are stored as 0-based linear indices; 2D sites are linearized row-major.
Text labels are 1-based: ``3`` on a ring, ``(2,3)`` on a torus.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterator, Sequence


class LatticeError(ValueError):
    """Raised for malformed lattice shapes or mismatched lattices."""


@dataclass(frozen=True)
class Lattice:
    dim: int
    L: int

    def __post_init__(self):
        if self.dim not in (1, 2):
            raise LatticeError(f"lattice dimension must be 1 or 2, got {self.dim}")
        if self.L < 1:
            raise LatticeError(f"lattice length must be positive, got {self.L}")

    @classmethod
    def chain(cls, L: int) -> "Lattice":
        return cls(1, L)

    @classmethod
    def square(cls, L: int) -> "Lattice":
        return cls(2, L)

    @property
    def n_sites(self) -> int:
        return self.L ** self.dim

    @property
    def n_translations(self) -> int:
        return self.L ** self.dim

    def coords(self, site: int) -> tuple[int, ...]:
        """0-based coordinates of a linear site index."""
        if self.dim == 1:
            return (site,)
        return divmod(site, self.L)

    def index(self, coords: Sequence[int]) -> int:
        """Linear index of (possibly out-of-range) 0-based coordinates, with wrap-around."""
        if self.dim == 1:
            return coords[0] % self.L
        return (coords[0] % self.L) * self.L + coords[1] % self.L

    def site(self, *one_based: int) -> int:
        """Linear index from 1-based coordinates, wrapping periodically."""
        if len(one_based) != self.dim:
            raise LatticeError(f"expected {self.dim} coordinates, got {one_based}")
        return self.index([c - 1 for c in one_based])

    def label(self, site: int) -> str:
        if self.dim == 1:
            return str(site + 1)
        r, c = divmod(site, self.L)
        return f"({r + 1},{c + 1})"

    def shifts(self) -> Iterator[tuple[int, ...]]:
        """All translation vectors in row-major order."""
        if self.dim == 1:
            for k in range(self.L):
                yield (k,)
        else:
            for a in range(self.L):
                for b in range(self.L):
                    yield (a, b)

    def shift_index(self, shift: Sequence[int]) -> int:
        return self.index(shift)

    def translate(self, site: int, shift: Sequence[int]) -> int:
        if self.dim == 1:
            return (site + shift[0]) % self.L
        r, c = divmod(site, self.L)
        return ((r + shift[0]) % self.L) * self.L + (c + shift[1]) % self.L

    @cached_property
    def translation_table(self) -> list[list[int]]:
        """``table[t][s]``: site ``s`` moved by the translation with linear index ``t``."""
        return [[self.translate(s, sh) for s in range(self.n_sites)] for sh in self.shifts()]

    @cached_property
    def anchor_table(self) -> list[list[int]]:
        """``table[a][s]``: site ``s`` after the translation that sends ``a`` to site 0."""
        n = self.n_sites
        table = []
        for a in range(n):
            neg = tuple(-x for x in self.coords(a))
            table.append([self.translate(s, neg) for s in range(n)])
        return table

    @cached_property
    def point_maps(self) -> list[tuple[int, ...]]:
        """Site permutations of the point group.

        1D: identity and the mirror i -> L - i (1-based). 2D: the eight elements of
        the dihedral group generated by the same mirror on each axis and the transpose.
        """
        L = self.L
        if self.dim == 1:
            ident = tuple(range(L))
            mirror = tuple((L - 2 - s) % L for s in range(L))
            return [ident, mirror] if mirror != ident else [ident]

        def mk(f):
            return tuple(self.index(f(*self.coords(s))) for s in range(self.n_sites))

        # 1-based (i, j) -> (L - i, j) is 0-based r -> L - 2 - r
        ops = [
            lambda r, c: (r, c),
            lambda r, c: (c, r),
            lambda r, c: (L - 2 - r, c),
            lambda r, c: (r, L - 2 - c),
            lambda r, c: (L - 2 - r, L - 2 - c),
            lambda r, c: (L - 2 - c, r),
            lambda r, c: (c, L - 2 - r),
            lambda r, c: (L - 2 - c, L - 2 - r),
        ]
        maps = []
        for f in ops:
            m = mk(f)
            if m not in maps:
                maps.append(m)
        return maps

    def __str__(self) -> str:
        return f"chain(L={self.L})" if self.dim == 1 else f"square(L={self.L})"
