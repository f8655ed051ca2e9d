"""Strengthening constraints: reduced density matrices, commutator equalities and
the ground-state optimality block."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import comb
from typing import Sequence

import numpy as np

from .basis import partition
from .geometry import Lattice
from .models import ModelSpec
from .moments import BlockBuilder, KeyRegistry, LinExpr, PSDBlock, Term
from .pauli import CapacityError, PauliMonomial, commutes, mul_codes
from .symmetry import SymmetryGroup

MAX_RDM_K = 5
OPTIMALITY_MAX_DEGREE = 8


@dataclass(frozen=True)
class RdmSpec:
    """A ``k``-site window; ``sites`` are 0-based and default to the first ``k`` sites
    (the first row on a torus)."""

    k: int
    sites: tuple[int, ...] | None = None

    def __post_init__(self):
        if not 1 <= self.k <= MAX_RDM_K:
            raise ValueError(f"RDM size k must be in 1..{MAX_RDM_K}, got {self.k}")
        if self.sites is not None:
            if len(self.sites) != self.k or len(set(self.sites)) != self.k:
                raise ValueError(f"RDM window needs {self.k} distinct sites, got {self.sites}")


def default_windows(lattice: Lattice, k: int) -> list[tuple[int, ...]]:
    """Sites 1..k on a ring; first-row cells on a torus, plus a 2x2 plaquette for k = 4."""
    if k > lattice.L and lattice.dim == 1:
        raise ValueError(f"RDM window of {k} sites does not fit a ring of {lattice.L}")
    if lattice.dim == 1:
        return [tuple(range(k))]
    if k > lattice.L:
        raise ValueError(f"RDM row window of {k} sites does not fit a torus of side {lattice.L}")
    windows = [tuple(lattice.index((0, j)) for j in range(k))]
    if k == 4:
        windows.append(tuple(lattice.index(c) for c in ((0, 0), (0, 1), (1, 0), (1, 1))))
    return windows


def _local_element(ax: int, s_in: int) -> complex:
    """<s_out|sigma^ax|s_in> for the only nonzero s_out."""
    if ax == 0 or ax == 1:
        return 1
    if ax == 2:
        return 1j if s_in == 0 else -1j
    return 1 if s_in == 0 else -1


def rdm_terms(window: Sequence[int], group: SymmetryGroup, registry: KeyRegistry):
    """Sparse triples (var, row, col, value) of the 2^k density matrix
    ``2^-k sum_w l(w) pi(w)`` over all 4^k words on the window."""
    k = len(window)
    dim = 1 << k
    V, R, C, X = [], [], [], []
    for axes in itertools.product((0, 1, 2, 3), repeat=k):
        letters = tuple(sorted((window[t] << 2) | axes[t] for t in range(k) if axes[t]))
        key = group.key_of(letters)
        if key.zero:
            continue
        var = registry.id(key) if key.letters else 0
        flip = 0
        for t in range(k):
            if axes[t] in (1, 2):
                flip |= 1 << (k - 1 - t)
        for s in range(dim):
            amp = 1.0 / dim
            for t in range(k):
                amp *= _local_element(axes[t], (s >> (k - 1 - t)) & 1)
            V.append(var)
            R.append(s ^ flip)
            C.append(s)
            X.append(amp)
    return np.array(V, dtype=np.int64), np.array(R, dtype=np.int64), np.array(C, dtype=np.int64), np.array(X, dtype=complex)


def rdm_matrix(window: Sequence[int], group: SymmetryGroup, registry: KeyRegistry) -> PSDBlock:
    """The full (unsplit) Hermitian density-matrix block."""
    V, R, C, X = rdm_terms(window, group, registry)
    upper = R <= C
    return PSDBlock.from_triples(f"rdm{len(window)}", 1 << len(window), "hermitian", V[upper], R[upper], C[upper], X[upper])


def magnetization(state: int, k: int) -> float:
    ups = k - bin(state).count("1")
    return (ups - (k - ups)) / 2


def rdm_blocks(spec: RdmSpec, lattice: Lattice, group: SymmetryGroup, registry: KeyRegistry,
               realify: bool = True) -> list[PSDBlock]:
    """Magnetization sectors of each window's density matrix (only m >= 0 when
    spin-flip symmetry is in force)."""
    windows = [spec.sites] if spec.sites is not None else default_windows(lattice, spec.k)
    k = spec.k
    out = []
    for w_i, window in enumerate(windows):
        V, R, C, X = rdm_terms(window, group, registry)
        m_of = np.array([magnetization(s, k) for s in range(1 << k)])
        sectors = sorted(set(m_of), reverse=True)
        if group.sign_hamiltonian:
            sectors = [m for m in sectors if m >= 0]
        for m in sectors:
            states = np.flatnonzero(m_of == m)
            local = -np.ones(1 << k, dtype=np.int64)
            local[states] = np.arange(len(states))
            keep = (local[R] >= 0) & (local[C] >= 0) & (R <= C)
            blk = PSDBlock.from_triples(f"rdm{k}.{w_i}[m={m:g}]", len(states), "hermitian",
                                        V[keep], local[R[keep]], local[C[keep]], X[keep], m=m)
            out.append(blk.realify() if realify else blk)
    return out


def sector_sizes(k: int) -> dict[float, int]:
    return {(2 * u - k) / 2: comb(k, u) for u in range(k + 1)}


# ---------------------------------------------------------------------------
# state optimality

def commutator_expr(terms: Sequence[tuple[float, tuple[int, ...]]], u: tuple[int, ...],
                    group: SymmetryGroup) -> LinExpr:
    """``l([H, u])`` divided by ``i``; anticommuting terms contribute ``2 c h u``."""
    out = LinExpr()
    for c, h in terms:
        if commutes(h, u):
            continue
        k, letters = mul_codes(h, u)
        # h u is anti-Hermitian: k is odd and i^(k-1) = +-1
        out.add_term(group.key_of(letters), 2 * c * (1 if k == 1 else -1))
    return out


def commutator_equalities(model: ModelSpec, basis: Sequence[PauliMonomial], group: SymmetryGroup,
                          max_degree: int | None = None) -> list[LinExpr]:
    """Nonzero, pairwise distinct equalities ``l([H, u]) = 0``.

    Symmetric images of ``u`` give the same equality, so one ``u`` per orbit is used.
    """
    terms = model.terms()
    seen_u = set()
    seen_e = set()
    out = []
    for m in basis:
        if max_degree is not None and m.degree > max_degree:
            continue
        u_key = group.key_of(m.letters).letters
        if u_key in seen_u:
            continue
        seen_u.add(u_key)
        expr = commutator_expr(terms, u_key, group)
        if not expr.terms and abs(expr.constant) == 0:
            continue
        norm = _normalized(expr)
        if norm in seen_e:
            continue
        seen_e.add(norm)
        out.append(expr)
    return out


def _normalized(expr: LinExpr):
    items = sorted(expr.terms.items())
    lead = items[0][1] if items else expr.constant
    return (round(expr.constant / lead, 12),) + tuple((k, round(v / lead, 12)) for k, v in items)


def optimality_kernel(terms: Sequence[tuple[float, tuple[int, ...]]]):
    """Entry kernel of ``l(v H w - (H v w + v w H) / 2)``."""

    def kernel(v: tuple[int, ...], w: tuple[int, ...]) -> list[Term]:
        out = []
        kvw, vw = mul_codes(v, w)
        for c, h in terms:
            k1, vh = mul_codes(v, h)
            k2, vhw = mul_codes(vh, w)
            out.append((k1 + k2, vhw, c))
            k3, hvw = mul_codes(h, vw)
            out.append((kvw + k3, hvw, -0.5 * c))
            k4, vwh = mul_codes(vw, h)
            out.append((kvw + k4, vwh, -0.5 * c))
        return out

    return kernel


def optimality_basis(model: ModelSpec, preset: str = "nn") -> list[PauliMonomial]:
    """Named bases: ``id`` (identity), ``singles`` ({1} and all single letters),
    ``nn`` (singles plus nearest-neighbour pairs)."""
    lat = model.lattice
    words: list[tuple[int, ...]] = [()]
    if preset not in ("id", "singles", "nn"):
        raise ValueError(f"unknown optimality basis preset {preset!r}")
    if preset in ("singles", "nn"):
        words += [((s << 2) | a,) for s in range(lat.n_sites) for a in (1, 2, 3)]
    if preset == "nn":
        pairs = []
        for a, b, J in model.bonds():
            if J == 1.0 and (a, b) not in pairs and (b, a) not in pairs:
                pairs.append((a, b))
        for a, b in pairs:
            lo, hi = min(a, b), max(a, b)
            for x, y in itertools.product((1, 2, 3), repeat=2):
                words.append(((lo << 2) | x, (hi << 2) | y))
    seen = {}
    for w in words:
        seen.setdefault(w, None)
    return [PauliMonomial(w, lat) for w in seen]


def optimality_blocks(model: ModelSpec, basis: Sequence[PauliMonomial], builder: BlockBuilder,
                      split: bool = True, dedup_axes: bool = True) -> list[PSDBlock]:
    """Symmetry-reduced blocks of the optimality matrix over ``basis``."""
    terms = model.terms()
    hdeg = max(len(h) for _, h in terms)
    top = max(m.degree for m in basis)
    if 2 * top + hdeg > OPTIMALITY_MAX_DEGREE:
        worst = max(basis, key=lambda m: m.degree)
        raise CapacityError(f"optimality entry ({worst}, {worst}) reaches degree {2 * top + hdeg} "
                            f"> {OPTIMALITY_MAX_DEGREE}")
    kernel = optimality_kernel(terms)
    if not split:
        pb = partition(basis, model.lattice)
        return builder.build("opt", pb.all_entries(), kernel)
    pb = partition(basis, model.lattice)
    parts = (1, 2) if dedup_axes else (1, 2, 3, 4)
    out = []
    for i in parts:
        if pb.part(i):
            out.extend(builder.build(f"opt{i}", pb.part(i), kernel))
    return out
