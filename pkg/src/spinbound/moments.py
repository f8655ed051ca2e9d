"""Moment-matrix entries, PSD blocks and their Fourier block-diagonalization.

Blocks are stored as sparse coefficient lists: entry (i, j) of the block is
``sum(val * y[var])`` over the stored triples with ``y[0] = 1`` standing for the
constant term.  Only the upper triangle (``i <= j``) is stored.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .basis import translation_pattern
from .geometry import Lattice
from .pauli import PauliMonomial, mul_codes
from .symmetry import MomentKey, SymmetryGroup

_I_POW = (1, 1j, -1, -1j)
DROP_TOL = 1e-13


class ConsistencyError(RuntimeError):
    """A moment entry violated the phase/parity rule of the sign symmetries."""


class StructureError(RuntimeError):
    """A block index set is not laid out as complete translation orbits."""


class LinExpr:
    """Real affine combination ``constant + sum(coef * l(key))`` of moment variables."""

    __slots__ = ("constant", "terms")

    def __init__(self, constant: float = 0.0, terms: Mapping[MomentKey, float] | None = None):
        self.constant = float(constant)
        self.terms = {k: float(v) for k, v in (terms or {}).items() if v != 0}

    @classmethod
    def of(cls, key: MomentKey, coef: float = 1.0) -> "LinExpr":
        if key.zero or coef == 0:
            return cls()
        if not key.letters:
            return cls(coef)
        return cls(0.0, {key: coef})

    def add_term(self, key: MomentKey, coef: float) -> None:
        """In-place accumulation; identity keys go to the constant, zero keys vanish."""
        if key.zero:
            return
        if not key.letters:
            self.constant += coef
            return
        v = self.terms.get(key, 0.0) + coef
        if v == 0:
            self.terms.pop(key, None)
        else:
            self.terms[key] = v

    def __add__(self, other: "LinExpr") -> "LinExpr":
        out = LinExpr(self.constant + other.constant, self.terms)
        for k, v in other.terms.items():
            out.add_term(k, v)
        return out

    def __neg__(self) -> "LinExpr":
        return self * -1.0

    def __sub__(self, other: "LinExpr") -> "LinExpr":
        return self + (-other)

    def __mul__(self, s: float) -> "LinExpr":
        return LinExpr(self.constant * s, {k: v * s for k, v in self.terms.items()})

    __rmul__ = __mul__

    def __eq__(self, other) -> bool:
        return isinstance(other, LinExpr) and self.constant == other.constant and self.terms == other.terms

    def isclose(self, other: "LinExpr", tol: float = 1e-12) -> bool:
        diff = self - other
        return abs(diff.constant) <= tol and all(abs(v) <= tol for v in diff.terms.values())

    def keys(self) -> list[MomentKey]:
        return list(self.terms)

    def evaluate(self, values: Mapping[MomentKey, float]) -> float:
        return self.constant + sum(c * values[k] for k, c in self.terms.items())

    def render(self, lattice: Lattice) -> str:
        parts = [f"{self.constant:+.12g}"] if self.constant or not self.terms else []
        parts += [f"{c:+.12g}*<{k.render(lattice)}>" for k, c in sorted(self.terms.items())]
        return " ".join(parts)

    def __repr__(self) -> str:
        return f"LinExpr({self.constant!r}, {len(self.terms)} terms)"


class KeyRegistry:
    """Assigns variable numbers 1, 2, ... to moment keys in first-materialization order."""

    def __init__(self, keys: Iterable[MomentKey] = ()):
        self.keys: list[MomentKey] = []
        self.index: dict[MomentKey, int] = {}
        for k in keys:
            self.id(k)

    def id(self, key: MomentKey) -> int:
        i = self.index.get(key)
        if i is None:
            self.keys.append(key)
            i = self.index[key] = len(self.keys)
        return i

    def __len__(self) -> int:
        return len(self.keys)

    def vector(self, values: Mapping[MomentKey, float]) -> np.ndarray:
        """Moment vector ``y`` with ``y[0] = 1``."""
        return np.array([1.0] + [values[k] for k in self.keys])


@dataclass
class PSDBlock:
    """A symmetric (or Hermitian) matrix of affine expressions constrained to be PSD.

    ``kind`` is "real", "realified-hermitian" (real storage of a Hermitian block)
    or "hermitian" (complex values, not yet realified).
    """

    label: str
    dim: int
    kind: str
    var: np.ndarray
    row: np.ndarray
    col: np.ndarray
    val: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError(f"block {self.label!r} has dimension {self.dim}")

    @classmethod
    def from_triples(cls, label: str, dim: int, kind: str, var, row, col, val, **meta) -> "PSDBlock":
        """Build from (var, i, j, value) lists; merges duplicates, folds the lower
        triangle onto the upper one and drops negligible values."""
        var = np.asarray(var, dtype=np.int64)
        row = np.asarray(row, dtype=np.int64)
        col = np.asarray(col, dtype=np.int64)
        val = np.asarray(val, dtype=complex if kind == "hermitian" else float)
        lower = row > col
        if lower.any():
            row, col = np.where(lower, col, row), np.where(lower, row, col)
            if kind == "hermitian":
                val = np.where(lower, val.conj(), val)
        if len(var):
            lin = (var * dim + row) * dim + col
            uniq, inv = np.unique(lin, return_inverse=True)
            summed = np.zeros(len(uniq), dtype=val.dtype)
            np.add.at(summed, inv, val)
            keep = np.abs(summed) > DROP_TOL
            uniq, summed = uniq[keep], summed[keep]
            var, rest = np.divmod(uniq, dim * dim)
            row, col = np.divmod(rest, dim)
            val = summed
        return cls(label, dim, kind, var, row, col, val, dict(meta))

    @property
    def nnz(self) -> int:
        return len(self.val)

    def variables(self) -> np.ndarray:
        return np.unique(self.var[self.var > 0])

    def matrix(self, y: np.ndarray) -> np.ndarray:
        """Dense value of the block at moment vector ``y`` (``y[0] = 1``)."""
        dtype = complex if self.kind == "hermitian" else float
        m = np.zeros((self.dim, self.dim), dtype=dtype)
        np.add.at(m, (self.row, self.col), self.val * y[self.var])
        diag = np.diag(np.diag(m))
        return m + m.conj().T - diag

    def coefficient_matrix(self, j: int) -> np.ndarray:
        """Dense coefficient matrix of variable ``j`` (``j = 0`` is the constant part)."""
        mask = self.var == j
        sub = PSDBlock(self.label, self.dim, self.kind, np.zeros(mask.sum(), dtype=np.int64),
                       self.row[mask], self.col[mask], self.val[mask])
        return sub.matrix(np.ones(1))

    def entries(self, keys: Sequence[MomentKey]) -> np.ndarray:
        """Upper-and-lower triangle array of LinExpr (real kinds only)."""
        if self.kind == "hermitian":
            raise TypeError("LinExpr entries need a real block; realify first")
        out = np.empty((self.dim, self.dim), dtype=object)
        for i in range(self.dim):
            for j in range(self.dim):
                out[i, j] = LinExpr()
        for v, i, j, x in zip(self.var, self.row, self.col, self.val):
            key = MomentKey(()) if v == 0 else keys[v - 1]
            out[i, j].add_term(key, x)
            if i != j:
                out[j, i].add_term(key, x)
        return out

    def realify(self) -> "PSDBlock":
        """``A + iB`` becomes ``[[A, B], [-B, A]]``; real blocks are returned unchanged."""
        if self.kind != "hermitian":
            return self
        if np.all(np.abs(self.val.imag) <= DROP_TOL):
            return PSDBlock(self.label, self.dim, "real", self.var, self.row, self.col, self.val.real.copy(), dict(self.meta))
        n = self.dim
        a, b = self.val.real, self.val.imag
        off = self.row < self.col
        var = np.concatenate([self.var, self.var, self.var, self.var[off]])
        row = np.concatenate([self.row, self.row + n, self.row, self.col[off]])
        col = np.concatenate([self.col, self.col + n, self.col + n, self.row[off] + n])
        val = np.concatenate([a, a, b, -b[off]])
        return PSDBlock.from_triples(self.label, 2 * n, "realified-hermitian", var, row, col, val, **self.meta)

    def remap(self, mapping: np.ndarray) -> "PSDBlock":
        """Renumber variables with ``mapping[old] = new`` (``mapping[0]`` must be 0)."""
        return PSDBlock(self.label, self.dim, self.kind, mapping[self.var], self.row, self.col, self.val, dict(self.meta))


@dataclass
class SDPProblem:
    """``min`` (or ``max``) of an affine objective over moment vectors with
    ``y[0] = 1`` subject to PSD blocks, equalities and scalar bounds."""

    variables: list[MomentKey]
    objective: LinExpr
    blocks: list[PSDBlock]
    equalities: list[LinExpr] = field(default_factory=list)
    box: tuple[LinExpr, float, float] | None = None
    sense: str = "min"
    unit_box: list[int] = field(default_factory=list)
    lattice: Lattice | None = None
    label: str = ""

    def __post_init__(self):
        self.index = {k: i + 1 for i, k in enumerate(self.variables)}
        for e in [self.objective, *self.equalities] + ([self.box[0]] if self.box else []):
            for k in e.terms:
                if k not in self.index:
                    raise ValueError(f"key {k} used but not declared as a variable")

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    def dense(self, expr: LinExpr) -> np.ndarray:
        """Coefficient vector of ``expr`` with the constant at position 0."""
        out = np.zeros(self.n_vars + 1)
        out[0] = expr.constant
        for k, c in expr.terms.items():
            out[self.index[k]] += c
        return out

    def vector(self, values: Mapping[MomentKey, float]) -> np.ndarray:
        return np.array([1.0] + [values.get(k, 0.0) for k in self.variables])

    def max_block(self) -> int:
        return max((b.dim for b in self.blocks), default=0)

    def with_window(self, expr: LinExpr, lo: float, hi: float, objective: LinExpr, sense: str) -> "SDPProblem":
        """Copy with a new objective and the scalar window ``lo <= expr <= hi``."""
        if lo > hi:
            raise ValueError(f"empty window [{lo}, {hi}]")
        return SDPProblem(self.variables, objective, self.blocks, self.equalities, (expr, lo, hi),
                          sense, self.unit_box, self.lattice, self.label)


# ---------------------------------------------------------------------------
# entries

Term = tuple[int, tuple[int, ...], float]
Kernel = Callable[[tuple[int, ...], tuple[int, ...]], Iterable[Term]]


def moment_kernel(v: tuple[int, ...], w: tuple[int, ...]) -> tuple[Term, ...]:
    k, letters = mul_codes(v, w)
    return ((k, letters, 1.0),)


def entry_terms(v: tuple[int, ...], w: tuple[int, ...], group: SymmetryGroup, kernel: Kernel = moment_kernel,
                parity: bool = True) -> list[tuple[MomentKey, complex]]:
    """Surviving (key, coefficient) pairs of a kernel entry.

    With ``parity`` the coefficient is made real: same-parity pairs must carry a
    real phase which is kept as is, cross-parity pairs an imaginary one which is
    multiplied by -i (odd-degree row) or +i (even-degree row).
    """
    cross = (len(v) + len(w)) % 2
    out = []
    for k, letters, weight in kernel(v, w):
        key = group.key_of(letters)
        if key.zero:
            continue
        if parity:
            if k % 2 != cross:
                raise ConsistencyError(
                    f"phase i^{k} on {'cross' if cross else 'same'}-parity entry "
                    f"({PauliMonomial(v, group.lattice)}, {PauliMonomial(w, group.lattice)})")
            if cross:
                k += 3 if len(v) % 2 else 1
            out.append((key, float(_I_POW[k % 4].real) * weight))
        else:
            out.append((key, _I_POW[k % 4] * weight))
    return out


def entry(v: PauliMonomial, w: PauliMonomial, group: SymmetryGroup) -> LinExpr:
    """Real moment-matrix entry l(v* w) after the sign and conjugate reductions."""
    out = LinExpr()
    for key, c in entry_terms(v.letters, w.letters, group):
        out.add_term(key, c)
    return out


# ---------------------------------------------------------------------------
# translation orbits and Fourier blocks

@dataclass
class OrbitLayout:
    """Index set organized as translation orbits.

    ``patterns[p]`` is the representative of orbit ``p``; ``members[p]`` lists
    the positions of its translates in the index set and ``shifts[p]`` the
    corresponding translation vectors; ``stabilizers[p]`` holds the shifts fixing
    the representative.
    """

    lattice: Lattice
    translations: bool
    patterns: list[tuple[int, ...]]
    members: list[list[int]]
    shifts: list[list[tuple[int, ...]]]
    stabilizers: list[list[tuple[int, ...]]]

    @property
    def size(self) -> int:
        return sum(len(m) for m in self.members)

    @classmethod
    def trivial(cls, lattice: Lattice, monomials: Sequence[tuple[int, ...]]) -> "OrbitLayout":
        zero = (0,) * lattice.dim
        n = len(monomials)
        return cls(lattice, False, list(monomials), [[i] for i in range(n)], [[zero] for _ in range(n)],
                   [[zero] for _ in range(n)])

    @classmethod
    def regular(cls, lattice: Lattice, t: int) -> "OrbitLayout":
        """``t`` free orbits laid out contiguously (numerical circulant tests)."""
        shifts = list(lattice.shifts())
        n = len(shifts)
        zero = (0,) * lattice.dim
        return cls(lattice, True, [(p,) for p in range(t)], [list(range(p * n, (p + 1) * n)) for p in range(t)],
                   [list(shifts) for _ in range(t)], [[zero] for _ in range(t)])

    @classmethod
    def from_monomials(cls, lattice: Lattice, monomials: Sequence[tuple[int, ...]]) -> "OrbitLayout":
        """Group a pattern-contiguous list into orbits, checking that every orbit is
        complete and contiguous."""
        patterns, members, shifts = [], [], []
        seen: dict[tuple[int, ...], int] = {}
        for pos, letters in enumerate(monomials):
            pat, shift_site = translation_pattern(lattice, letters)
            if not patterns or patterns[-1] != pat:
                if pat in seen:
                    raise StructureError(f"translates of {PauliMonomial(pat, lattice)} are not contiguous")
                seen[pat] = len(patterns)
                patterns.append(pat)
                members.append([])
                shifts.append([])
            members[-1].append(pos)
            shifts[-1].append(lattice.coords(shift_site))
        stabilizers = []
        group = SymmetryGroup(lattice, True, False, False, False, False)
        for pat, mem in zip(patterns, members):
            orbit = {}
            stab = []
            for g in lattice.shifts():
                image = group.translate(PauliMonomial(pat, lattice), g).letters
                orbit[image] = None
                if image == pat:
                    stab.append(tuple(g))
            have = {monomials[i] for i in mem}
            if have != set(orbit) or len(mem) != len(orbit):
                raise StructureError(
                    f"orbit of {PauliMonomial(pat, lattice)} has {len(orbit)} translates, index set holds {len(have)}")
            stabilizers.append(stab)
        return cls(lattice, True, patterns, members, shifts, stabilizers)

    def frequencies(self, dedup: bool = True) -> list[tuple[int, ...]]:
        """Frequencies to emit; with ``dedup`` one of each conjugate pair {k, -k}."""
        if not self.translations:
            return [(0,) * self.lattice.dim]
        L = self.lattice.L
        out = []
        for k in self.lattice.shifts():
            neg = tuple((-x) % L for x in k)
            if not dedup or tuple(k) <= neg:
                out.append(tuple(k))
        return out

    def allowed(self, k: Sequence[int]) -> list[int]:
        """Orbits whose stabilizer lies in the kernel of the character ``k``."""
        L = self.lattice.L
        return [p for p, stab in enumerate(self.stabilizers)
                if all(sum(a * b for a, b in zip(k, s)) % L == 0 for s in stab)]

    def self_conjugate(self, k: Sequence[int]) -> bool:
        return all((2 * x) % self.lattice.L == 0 for x in k)

    def fourier_vectors(self, k: Sequence[int]) -> np.ndarray:
        """Orthonormal columns spanning the frequency-``k`` subspace, one per allowed orbit."""
        roots = unit_roots(self.lattice.L)
        ps = self.allowed(k)
        U = np.zeros((self.size, len(ps)), dtype=complex)
        for col, p in enumerate(ps):
            n_p = len(self.members[p])
            for pos, m in zip(self.members[p], self.shifts[p]):
                U[pos, col] = roots[_dot(k, m, self.lattice.L)] / math.sqrt(n_p)
        return U


def _dot(k, m, L) -> int:
    return sum(a * b for a, b in zip(k, m)) % L


def unit_roots(L: int) -> np.ndarray:
    """``roots[n] = exp(-2 pi i n / L)`` with exact values at quarter turns."""
    n = np.arange(L)
    z = np.exp(-2j * np.pi * n / L)
    re, im = z.real.copy(), z.imag.copy()
    for arr in (re, im):
        for target in (0.0, 1.0, -1.0):
            arr[np.abs(arr - target) < 1e-15] = target
    return re + 1j * im


@dataclass
class FirstRows:
    """Sparse first-row data ``c^{pq}_j``: entry (rep_p, member j of orbit q).

    Each record is (p, q, j, var, coef) with ``p <= q`` and ``j`` indexing
    ``layout.members[q]``.
    """

    p: np.ndarray
    q: np.ndarray
    j: np.ndarray
    var: np.ndarray
    coef: np.ndarray


def fourier_blocks(layout: OrbitLayout, rows: FirstRows, label: str, dedup: bool = True,
                   complex_entries: bool = False) -> list[PSDBlock]:
    """Frequency blocks ``sqrt(n_p / n_q) * sum_j w^{-k.m_j} c^{pq}_j`` of a
    translation-invariant matrix given by its first rows.

    Blocks come out as "hermitian" unless the frequency is self-conjugate and the
    entries are real, in which case they are "real".
    """
    L = layout.lattice.L
    roots = unit_roots(L)
    sizes = np.array([len(m) for m in layout.members], dtype=float)
    shift_arr = [np.array(s, dtype=np.int64).reshape(len(s), -1) for s in layout.shifts]
    # per-record shift coordinates
    if len(rows.p):
        mcoords = np.stack([shift_arr[q][j] for q, j in zip(rows.q, rows.j)])
    else:
        mcoords = np.zeros((0, layout.lattice.dim), dtype=np.int64)
    scale = np.sqrt(sizes[rows.p] / sizes[rows.q]) if len(rows.p) else np.zeros(0)
    out = []
    for k in layout.frequencies(dedup):
        allowed = layout.allowed(k)
        if not allowed:
            continue
        local = -np.ones(len(layout.patterns), dtype=np.int64)
        local[allowed] = np.arange(len(allowed))
        keep = (local[rows.p] >= 0) & (local[rows.q] >= 0)
        phase = roots[(mcoords[keep] @ np.array(k, dtype=np.int64)) % L]
        vals = rows.coef[keep] * scale[keep] * phase
        real = layout.self_conjugate(k) and not complex_entries
        if real:
            if np.any(np.abs(vals.imag) > 1e-12):
                raise ConsistencyError(f"imaginary entries in self-conjugate frequency {k} of {label}")
            vals = vals.real
        kname = ",".join(str(x) for x in k)
        blk = PSDBlock.from_triples(f"{label}[k={kname}]", len(allowed), "real" if real else "hermitian",
                                    rows.var[keep], local[rows.p[keep]], local[rows.q[keep]], vals, k=k)
        if blk.kind == "hermitian":
            # diagonal entries of a Hermitian block are real up to rounding
            diag = blk.row == blk.col
            blk.val[diag] = blk.val[diag].real
        out.append(blk)
    return out


class BlockBuilder:
    """Builds symmetry-reduced PSD blocks for a kernel over a list of monomials."""

    def __init__(self, group: SymmetryGroup, registry: KeyRegistry, parity: bool = True,
                 dft: bool = True, realify: bool = True):
        self.group = group
        self.registry = registry
        self.parity = parity
        self.dft = dft and group.translations
        self.realify = realify

    def layout(self, monomials: Sequence[tuple[int, ...]]) -> OrbitLayout:
        if self.dft:
            return OrbitLayout.from_monomials(self.group.lattice, monomials)
        return OrbitLayout.trivial(self.group.lattice, monomials)

    def first_rows(self, layout: OrbitLayout, monomials: Sequence[tuple[int, ...]], kernel: Kernel) -> FirstRows:
        P, Q, J, V, C = [], [], [], [], []
        reg = self.registry
        for p, rep_pos in enumerate(m[0] for m in layout.members):
            # representative of orbit p sits at its zero shift
            v = layout.patterns[p] if self.dft else monomials[rep_pos]
            for q in range(p, len(layout.patterns)):
                for j, pos in enumerate(layout.members[q]):
                    for key, c in entry_terms(v, monomials[pos], self.group, kernel, self.parity):
                        P.append(p)
                        Q.append(q)
                        J.append(j)
                        V.append(reg.id(key) if key.letters else 0)
                        C.append(c)
        return FirstRows(np.array(P, dtype=np.int64), np.array(Q, dtype=np.int64), np.array(J, dtype=np.int64),
                         np.array(V, dtype=np.int64), np.array(C, dtype=complex))

    def build(self, label: str, monomials: Sequence[PauliMonomial] | Sequence[tuple[int, ...]],
              kernel: Kernel = moment_kernel) -> list[PSDBlock]:
        letters = [m.letters if isinstance(m, PauliMonomial) else tuple(m) for m in monomials]
        if not letters:
            return []
        layout = self.layout(letters)
        rows = self.first_rows(layout, letters, kernel)
        blocks = fourier_blocks(layout, rows, label, complex_entries=not self.parity)
        if self.realify:
            blocks = [b.realify() for b in blocks]
        return blocks


def circulant_diagonalize(matrix: np.ndarray, layout: OrbitLayout, dedup: bool = True) -> list[np.ndarray]:
    """Numeric frequency blocks of a translation-invariant matrix laid out as ``layout``.

    Uses only the representative rows of ``matrix`` (the first row of every tile)."""
    P, Q, J, C = [], [], [], []
    for p, mem_p in enumerate(layout.members):
        rep = mem_p[0]
        for q in range(p, len(layout.members)):
            for j, pos in enumerate(layout.members[q]):
                P.append(p)
                Q.append(q)
                J.append(j)
                C.append(matrix[rep, pos])
    n = len(P)
    rows = FirstRows(np.array(P, dtype=np.int64), np.array(Q, dtype=np.int64), np.array(J, dtype=np.int64),
                     np.zeros(n, dtype=np.int64), np.array(C, dtype=complex))
    blocks = fourier_blocks(layout, rows, "numeric", dedup=dedup, complex_entries=True)
    return [b.matrix(np.ones(1)) for b in blocks]


def circulant_eigenvalues(first_row: Sequence[complex]) -> np.ndarray:
    """``lambda_k = sum_m c_m w^{-mk}`` for every frequency ``k``."""
    c = np.asarray(first_row, dtype=complex)
    L = len(c)
    roots = unit_roots(L)
    m = np.arange(L)
    return np.array([np.sum(c * roots[(m * k) % L]) for k in range(L)])
