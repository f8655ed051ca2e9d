"""Sparse monomial bases on rings and tori, and their sign-symmetry partition.

In 1D the basis holds contiguous words of length at most ``d`` and two-site
pairs at distances ``2..r``.  In 2D the cumulative sets are single sites, pairs
within offset 4, the six three-site patterns and 2x2 plaquettes.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .geometry import Lattice, LatticeError
from .pauli import PauliMonomial, Signature, axis_counts

# three-site patterns (a, b, c, e): sites (i, j), (i + a, j + b), (i + c, j + e)
TRIPLE_PATTERNS = ((1, 0, 2, 0), (0, 1, 0, 2), (0, -1, 1, -1), (0, 1, 1, 1), (1, 0, 1, -1), (1, 0, 1, 1))
PAIR_RANGE = 4


@dataclass
class MonomialBasis:
    entries: list[PauliMonomial]
    lattice: Lattice
    params: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self) -> Iterator[PauliMonomial]:
        return iter(self.entries)

    def letter_set(self) -> set[tuple[int, ...]]:
        return {m.letters for m in self.entries}

    def dump(self) -> str:
        """One monomial per line, in basis order."""
        return "\n".join(str(m) for m in self.entries) + "\n"


def _words(lattice: Lattice, site_groups: Iterable[tuple[int, ...]]) -> Iterator[tuple[int, ...]]:
    """All-axis Pauli words on each group of distinct sites."""
    for sites in site_groups:
        if len(set(sites)) != len(sites):
            continue
        order = sorted(range(len(sites)), key=lambda t: sites[t])
        for axes in itertools.product((1, 2, 3), repeat=len(sites)):
            yield tuple((sites[t] << 2) | axes[t] for t in order)


def _dedup(lattice: Lattice, words: Iterable[tuple[int, ...]]) -> list[PauliMonomial]:
    seen = {(): None}
    out = [PauliMonomial.identity(lattice)]
    for w in words:
        if w not in seen:
            seen[w] = None
            out.append(PauliMonomial(w, lattice))
    return out


def build_1d(L: int, d: int, r: int = 1) -> MonomialBasis:
    """Contiguous windows of length 1..d at every site plus pairs at distances 2..r."""
    if L < 3:
        raise LatticeError(f"chain needs L >= 3, got {L}")
    if d < 1:
        raise LatticeError(f"basis degree must be >= 1, got {d}")
    if not 1 <= r <= L // 2:
        raise LatticeError(f"pair range r must be in [1, {L // 2}], got {r}")
    lat = Lattice.chain(L)

    def groups():
        for length in range(1, min(d, L) + 1):
            for s in range(L):
                yield tuple((s + t) % L for t in range(length))
        for j in range(2, r + 1):
            for s in range(L):
                yield (s, (s + j) % L)

    return MonomialBasis(_dedup(lat, _words(lat, groups())), lat, {"d": d, "r": r})


def size_1d(L: int, d: int, r: int = 1) -> int:
    """Closed-form basis size when wrap-around causes no collisions."""
    return 1 + L * sum(3 ** j for j in range(1, d + 1)) + 9 * L * (r - 1)


def build_2d(L: int, d: int) -> MonomialBasis:
    """Cumulative 2D sets: singles (d >= 1), pairs (d >= 2), triples (d >= 3), plaquettes (d = 4).

    Offsets that wrap a site onto itself on small tori are skipped and repeated
    words are kept once.
    """
    if not 1 <= d <= 4:
        raise LatticeError(f"2D basis degree must be in 1..4, got {d}")
    if L < 3:
        raise LatticeError(f"square lattice needs L >= 3, got {L}")
    lat = Lattice.square(L)
    cells = [(i, j) for i in range(L) for j in range(L)]
    idx = lat.index

    def groups():
        for i, j in cells:
            yield (idx((i, j)),)
        if d >= 2:
            offsets = [(s, t) for s in range(-PAIR_RANGE, PAIR_RANGE + 1)
                       for t in range(-PAIR_RANGE, PAIR_RANGE + 1) if (s, t) != (0, 0)]
            for i, j in cells:
                a = idx((i, j))
                for s, t in offsets:
                    b = idx((i + s, j + t))
                    if a < b:
                        yield (a, b)
        if d >= 3:
            for i, j in cells:
                for pa, pb, pc, pe in TRIPLE_PATTERNS:
                    yield (idx((i, j)), idx((i + pa, j + pb)), idx((i + pc, j + pe)))
        if d >= 4:
            for i, j in cells:
                yield (idx((i, j)), idx((i, j + 1)), idx((i + 1, j)), idx((i + 1, j + 1)))

    return MonomialBasis(_dedup(lat, _words(lat, groups())), lat, {"d": d})


def translation_pattern(lattice: Lattice, letters: tuple[int, ...]) -> tuple[tuple[int, ...], int]:
    """The lexicographically smallest translate of ``letters`` and the index of the
    smallest shift carrying it back to ``letters``."""
    if not letters:
        return letters, 0
    best = None
    best_shift = None
    table = lattice.anchor_table
    for c in letters:
        tab = table[c >> 2]
        cand = tuple(sorted((tab[x >> 2] << 2) | (x & 3) for x in letters))
        # the anchor site is where site 0 of the pattern lands
        shift = c >> 2
        if best is None or cand < best or (cand == best and shift < best_shift):
            best, best_shift = cand, shift
    return best, best_shift


@dataclass
class PartitionedBasis:
    """Four sub-bases indexed by the model-sign signature, each stored as its
    even-degree half followed by its odd-degree half."""

    lattice: Lattice
    even: dict[int, list[PauliMonomial]]
    odd: dict[int, list[PauliMonomial]]

    def part(self, i: int) -> list[PauliMonomial]:
        return self.even[i] + self.odd[i]

    def sizes(self) -> dict[int, int]:
        return {i: len(self.even[i]) + len(self.odd[i]) for i in (1, 2, 3, 4)}

    def all_entries(self) -> list[PauliMonomial]:
        return [m for i in (1, 2, 3, 4) for m in self.part(i)]


def block_of(m: PauliMonomial) -> int:
    return Signature.from_counts(*axis_counts(m.letters)).block


def partition(basis: MonomialBasis | Iterable[PauliMonomial], lattice: Lattice | None = None) -> PartitionedBasis:
    """Split by signature and degree parity; sort each half by (pattern, translation)
    so that translates of one pattern are contiguous."""
    entries = list(basis)
    lat = lattice or (basis.lattice if isinstance(basis, MonomialBasis) else entries[0].lattice)
    even = {i: [] for i in (1, 2, 3, 4)}
    odd = {i: [] for i in (1, 2, 3, 4)}
    for m in entries:
        (odd if m.degree % 2 else even)[block_of(m)].append(m)

    def key(m):
        pat, shift = translation_pattern(lat, m.letters)
        return len(pat), pat, shift

    for half in (even, odd):
        for i in half:
            half[i].sort(key=key)
    return PartitionedBasis(lat, even, odd)
