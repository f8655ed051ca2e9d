"""Lattice and spin symmetries acting on Pauli monomials, and moment canonicalization.

The group is translations x point group (mirror in 1D, dihedral in 2D) x the six
permutations of the spin axes.  A monomial's moment key is the minimum of its orbit
under the order (degree, then lexicographic on (site, axis) with x < y < z).
"""
from __future__ import annotations

import itertools
import threading
from dataclasses import dataclass
from typing import Iterator, NamedTuple, Sequence

from .geometry import Lattice, LatticeError
from .pauli import PauliMonomial, axis_counts

AXIS_PERMS: tuple[tuple[int, int, int], ...] = tuple(itertools.permutations((1, 2, 3)))


class MomentKey(NamedTuple):
    """Canonical orbit representative (phase-free letters) naming one real moment."""

    letters: tuple[int, ...]
    zero: bool = False

    def rep(self, lattice: Lattice) -> PauliMonomial:
        return PauliMonomial(self.letters, lattice)

    def render(self, lattice: Lattice) -> str:
        return str(self.rep(lattice))


IDENTITY_KEY = MomentKey(())


@dataclass(frozen=True)
class GroupElement:
    """Site map ``point`` (index into the lattice point maps), then translation
    ``shift``, then axis relabelling ``perm`` (perm[a-1] is the image of axis a)."""

    shift: tuple[int, ...]
    point: int = 0
    perm: tuple[int, int, int] = (1, 2, 3)


def order_key(letters: tuple[int, ...]) -> tuple[int, tuple[int, ...]]:
    return len(letters), letters


def forced_zero(letters: Sequence[int], sign_model: bool = True, sign_hamiltonian: bool = True) -> bool:
    nx, ny, nz = axis_counts(letters)
    if sign_hamiltonian and (nx % 2 or ny % 2 or nz % 2):
        return True
    if sign_model and ((nx + ny) % 2 or (ny + nz) % 2):
        return True
    return False


class SymmetryGroup:
    """The symmetry group used to identify moments, with per-factor toggles."""

    def __init__(self, lattice: Lattice, translations: bool = True, point_group: bool = True,
                 axis_permutation: bool = True, sign_model: bool = True,
                 sign_hamiltonian: bool = True):
        self.lattice = lattice
        self.translations = translations
        self.point_group = point_group
        self.axis_permutation = axis_permutation
        self.sign_model = sign_model
        self.sign_hamiltonian = sign_hamiltonian
        self._point_maps = lattice.point_maps if point_group else lattice.point_maps[:1]
        self._memo: dict[tuple[int, ...], MomentKey] = {}
        self._lock = threading.Lock()

    @classmethod
    def trivial(cls, lattice: Lattice) -> "SymmetryGroup":
        return cls(lattice, False, False, False, False, False)

    @property
    def order(self) -> int:
        t = self.lattice.n_translations if self.translations else 1
        return t * len(self._point_maps) * (6 if self.axis_permutation else 1)

    def elements(self) -> Iterator[GroupElement]:
        shifts = list(self.lattice.shifts()) if self.translations else [(0,) * self.lattice.dim]
        perms = AXIS_PERMS if self.axis_permutation else AXIS_PERMS[:1]
        for p in range(len(self._point_maps)):
            for sh in shifts:
                for perm in perms:
                    yield GroupElement(sh, p, perm)

    def apply(self, g: GroupElement, a: PauliMonomial) -> PauliMonomial:
        if a.lattice != self.lattice:
            raise LatticeError(f"monomial on {a.lattice}, group on {self.lattice}")
        pmap = self.lattice.point_maps[g.point]
        lat = self.lattice
        codes = sorted((lat.translate(pmap[c >> 2], g.shift) << 2) | g.perm[(c & 3) - 1]
                       for c in a.letters)
        return PauliMonomial(tuple(codes), lat, a.phase)

    def translate(self, a: PauliMonomial, shift: Sequence[int]) -> PauliMonomial:
        return self.apply(GroupElement(tuple(shift)), a)

    def canonical_key(self, a: PauliMonomial) -> MomentKey:
        return self.key_of(a.letters)

    def key_of(self, letters: tuple[int, ...]) -> MomentKey:
        """Memoized canonical key for a phase-free letter tuple."""
        key = self._memo.get(letters)
        if key is None:
            key = self._canonicalize(letters)
            with self._lock:
                self._memo.setdefault(letters, key)
        return key

    def _canonicalize(self, letters: tuple[int, ...]) -> MomentKey:
        zero = forced_zero(letters, self.sign_model, self.sign_hamiltonian)
        if not letters:
            return MomentKey((), zero)
        anchors = self.lattice.anchor_table
        best = None
        for pmap in self._point_maps:
            mapped = [(pmap[c >> 2], c & 3) for c in letters]
            # the orbit minimum starts at site 0, so only translations that move
            # one of the letters onto site 0 can produce it
            cands = [s for s, _ in mapped] if self.translations else [None]
            for anchor in cands:
                if anchor is None:
                    moved = sorted(mapped)
                else:
                    tab = anchors[anchor]
                    moved = sorted((tab[s], ax) for s, ax in mapped)
                if self.axis_permutation:
                    relabel = {}
                    codes = []
                    for s, ax in moved:
                        r = relabel.get(ax)
                        if r is None:
                            r = relabel[ax] = len(relabel) + 1
                        codes.append((s << 2) | r)
                    cand = tuple(codes)
                else:
                    cand = tuple((s << 2) | ax for s, ax in moved)
                if best is None or cand < best:
                    best = cand
        return MomentKey(best, zero)

    def orbit(self, a: PauliMonomial) -> set[tuple[int, ...]]:
        """Brute-force orbit of the phase-free letters (testing and small cases)."""
        return {self.apply(g, a).letters for g in self.elements()}

    def __repr__(self) -> str:
        flags = [n for n in ("translations", "point_group", "axis_permutation",
                             "sign_model", "sign_hamiltonian") if getattr(self, n)]
        return f"SymmetryGroup({self.lattice}, {', '.join(flags)})"
