import numpy as np
import pytest
from scipy.linalg import circulant

from spinbound.basis import build_1d, build_2d, partition
from spinbound.config import RelaxationConfig
from spinbound.geometry import Lattice
from spinbound.models import ModelSpec
from spinbound.moments import (BlockBuilder, ConsistencyError, KeyRegistry, LinExpr, OrbitLayout, PSDBlock,
                               StructureError, circulant_diagonalize, circulant_eigenvalues, entry, entry_terms)
from spinbound.pauli import PauliMonomial, matrix_rep
from spinbound.relaxation import assemble, moment_parts, symmetry_group
from spinbound.symmetry import MomentKey, SymmetryGroup

from conftest import ground_state

CHAIN10 = Lattice.chain(10)


def P(text, lat=CHAIN10):
    return PauliMonomial.parse(text, lat)


# ---------------------------------------------------------------- LinExpr

def test_linexpr_algebra():
    a, b = MomentKey((1, 5)), MomentKey((1, 9))
    e = LinExpr.of(a, 2.0) + LinExpr.of(b, -1.0) + LinExpr(0.5)
    assert e.constant == 0.5 and e.terms == {a: 2.0, b: -1.0}
    assert (e - e) == LinExpr()
    assert (2 * e).terms[a] == 4.0
    assert LinExpr.of(MomentKey((1,), True)) == LinExpr()
    assert LinExpr.of(MomentKey(()), 3.0) == LinExpr(3.0)
    assert e.evaluate({a: 0.1, b: 0.2}) == pytest.approx(0.5 + 0.2 - 0.2)


def test_registry_order():
    reg = KeyRegistry()
    a, b = MomentKey((1, 5)), MomentKey((1, 9))
    assert reg.id(b) == 1 and reg.id(a) == 2 and reg.id(b) == 1
    assert reg.vector({a: 0.3, b: 0.7}).tolist() == [1.0, 0.7, 0.3]


# ---------------------------------------------------------------- entries

def test_entry_examples():
    g = SymmetryGroup(CHAIN10)
    assert entry(P("X1 X2"), P("X1 X2"), g) == LinExpr(1.0)
    e = entry(P("X1 X2"), P("X2 X3"), g)
    assert e == LinExpr.of(g.canonical_key(P("X1 X3")), 1.0)


def test_entry_cross_parity_coefficient():
    # NF(Z1 X1 X2) = i Y1 X2; the coefficient (-i)(i) = 1 multiplies l(key(Y1 X2)).
    # With the sign flips on, Y1 X2 is forced zero, so those are off here.
    g = SymmetryGroup(CHAIN10, sign_model=False, sign_hamiltonian=False)
    terms = entry_terms(P("Z1").letters, P("X1 X2").letters, g)
    assert terms == [(g.canonical_key(P("Y1 X2")), 1.0)]
    assert entry(P("Z1"), P("X1 X2"), SymmetryGroup(CHAIN10)) == LinExpr()


def test_entry_parity_violation_detected():
    # a non-Hermitian kernel yields a real phase on a cross-parity pair
    g = SymmetryGroup(CHAIN10, sign_hamiltonian=False)

    def bad(v, w):
        return [(0, (1, 5), 1.0)]

    with pytest.raises(ConsistencyError):
        entry_terms(P("Z1").letters, P("X1 X2").letters, g, kernel=bad)


def test_entry_matches_matrix_oracle():
    """Raw entries <psi| v* w |psi> from the ED state equal the reduced entry
    evaluated at the state's moments (sign and conjugate reductions included)."""
    lat = Lattice.chain(6)
    gs = ground_state("chain", 6)
    psi = gs.vector
    g = SymmetryGroup(lat)
    basis = list(build_1d(6, 2, 1))
    values = {}
    for v in basis:
        for w in basis:
            if (v * w).letters and not g.key_of((v * w).letters).zero:
                key = g.key_of((v * w).letters)
                if key not in values:
                    m = PauliMonomial(key.letters, lat)
                    values[key] = float(np.real(psi.conj() @ matrix_rep(m, 6) @ psi))
    pb = partition(basis, lat)
    for part in range(1, 5):
        ms = pb.part(part)
        for v in ms:
            for w in ms:
                raw = psi.conj() @ matrix_rep(v, 6).conj().T @ matrix_rep(w, 6) @ psi
                red = entry(v, w, g).evaluate(values)
                if (v.degree + w.degree) % 2 == 0:
                    assert red == pytest.approx(raw.real, abs=1e-10)
                    assert abs(raw.imag) < 1e-10
                else:
                    # cross-parity entries are i times a real number; the reduced
                    # entry removes the unit consistently with the row parity
                    factor = -1j if v.degree % 2 else 1j
                    assert red == pytest.approx((factor * raw).real, abs=1e-10)


# ---------------------------------------------------------------- circulant / DFT

@pytest.mark.parametrize("L", [4, 6, 8, 10])
def test_circulant_eigenvalues(L, rng):
    c = rng.normal(size=L)
    C = circulant(c).T  # first row c
    lam = circulant_eigenvalues(c)
    for k in range(L):
        v = np.exp(-2j * np.pi * k * np.arange(L) / L) / np.sqrt(L)
        assert np.allclose(C @ v, lam[k] * v, atol=1e-10)
    assert np.isclose(np.prod(lam), np.linalg.det(C), rtol=1e-8)


def test_scalar_circulant_example():
    lam = circulant_eigenvalues([2, 1, 0, 1])
    assert np.allclose(lam[:3], [4, 2, 0])


def random_block_circulant(lat, t, rng, hermitian=True):
    layout = OrbitLayout.regular(lat, t)
    n = layout.size
    shifts = list(lat.shifts())
    tiles = rng.normal(size=(t, t, len(shifts))) + 1j * rng.normal(size=(t, t, len(shifts)))
    M = np.zeros((n, n), dtype=complex)
    for p in range(t):
        for q in range(t):
            for a, sa in enumerate(shifts):
                for b, sb in enumerate(shifts):
                    rel = lat.shift_index([y - x for x, y in zip(sa, sb)])
                    M[p * len(shifts) + a, q * len(shifts) + b] = tiles[p, q, rel]
    if hermitian:
        M = M + M.conj().T
    return M, layout


@pytest.mark.parametrize("lat, t", [(Lattice.chain(4), 2), (Lattice.chain(6), 3), (Lattice.square(3), 2),
                                    (Lattice.square(4), 2)])
def test_dft_round_trip(lat, t, rng):
    M, layout = random_block_circulant(lat, t, rng)
    blocks = circulant_diagonalize(M, layout, dedup=False)
    U = np.hstack([layout.fourier_vectors(k) for k in layout.frequencies(dedup=False)])
    assert np.allclose(U.conj().T @ U, np.eye(layout.size), atol=1e-12)
    D = np.zeros_like(M)
    off = 0
    for B in blocks:
        d = B.shape[0]
        D[off:off + d, off:off + d] = B
        off += d
    back = U @ D @ U.conj().T
    assert np.max(np.abs(back - M)) <= 1e-12
    # dedup keeps one of each conjugate pair, spectra of the dropped ones repeat
    kept = circulant_diagonalize(M.real + 0j, layout, dedup=True)
    full = circulant_diagonalize(M.real + 0j, layout, dedup=False)
    ev = lambda bs: sorted(np.round(np.concatenate([np.linalg.eigvalsh(b) for b in bs]), 8))
    assert set(ev(kept)) == set(ev(full))


def test_identity_border():
    """Identity row couples only to frequency 0, with weight sqrt(L) * c_j."""
    lat = Lattice.chain(6)
    words = [()] + [tuple(sorted(((s << 2) | 3, (((s + 1) % 6) << 2) | 3))) for s in range(6)]
    layout = OrbitLayout.from_monomials(lat, words)
    assert layout.allowed((0,)) == [0, 1]
    assert layout.allowed((1,)) == [1]
    M = np.eye(7)
    M[0, 1:] = M[1:, 0] = 0.3
    blocks = circulant_diagonalize(M, layout)
    assert blocks[0][0, 1] == pytest.approx(np.sqrt(6) * 0.3)


def test_structure_fault_reported():
    lat = Lattice.chain(4)
    words = [((0 << 2) | 3,), ((1 << 2) | 3,), ((0 << 2) | 1,), ((2 << 2) | 3,), ((3 << 2) | 3,)]
    with pytest.raises(StructureError):
        OrbitLayout.from_monomials(lat, words)
    with pytest.raises(StructureError):
        OrbitLayout.from_monomials(lat, words[:2])


def symbolic_vs_numeric(model, cfg):
    """Reduced blocks from the builder equal U* M U of the full part matrix (built
    entry by entry), evaluated at the oracle moments."""
    gs = ground_state(model.family, model.L, model.J2)
    group = symmetry_group(model, cfg)
    registry = KeyRegistry()
    basis = build_1d(model.L, cfg.d, cfg.r) if model.lattice.dim == 1 else build_2d(model.L, cfg.d)
    pb = partition(basis)
    builder = BlockBuilder(group, registry, parity=True, dft=True, realify=False)
    for label, part in moment_parts(pb, cfg):
        blocks = builder.build(label, part)
        from spinbound.oracle import moment_values
        vals = moment_values(gs, registry.keys)
        y = registry.vector(vals)
        letters = [m.letters for m in part]
        full = np.zeros((len(part), len(part)))
        for i, v in enumerate(part):
            for j, w in enumerate(part):
                full[i, j] = entry(v, w, group).evaluate(vals)
        layout = OrbitLayout.from_monomials(model.lattice, letters)
        ref = circulant_diagonalize(full, layout)
        assert len(ref) == len(blocks)
        for R, B in zip(ref, blocks):
            assert np.allclose(B.matrix(y), R, atol=1e-10)
            assert np.linalg.eigvalsh(B.matrix(y))[0] >= -1e-9


@pytest.mark.parametrize("model, cfg", [
    (ModelSpec("chain", 6), RelaxationConfig(d=2, r=2)),
    (ModelSpec("chain", 8), RelaxationConfig(d=3, r=1)),
    (ModelSpec("square", 3), RelaxationConfig(d=2)),
])
def test_symbolic_blocks_match_numeric_dft(model, cfg):
    symbolic_vs_numeric(model, cfg)


def test_blocks_234_coincide():
    """Parts 2, 3, 4 are images of each other under axis permutation: their blocks
    use the same variables and have equal spectra at any moment vector."""
    from spinbound.oracle import moment_values

    model = ModelSpec("chain", 8)
    cfg = RelaxationConfig(d=3, r=1, axis_permutation=True)
    group = symmetry_group(model, cfg)
    reg = KeyRegistry()
    pb = partition(build_1d(8, 3, 1))
    builder = BlockBuilder(group, reg)
    b2, b3, b4 = (builder.build(f"M{i}", pb.part(i)) for i in (2, 3, 4))
    y = reg.vector(moment_values(ground_state("chain", 8), reg.keys))
    for x, u, z in zip(b2, b3, b4):
        assert x.dim == u.dim == z.dim
        assert set(x.variables()) == set(u.variables()) == set(z.variables())
        ev = np.linalg.eigvalsh(x.matrix(y))
        for other in (u, z):
            assert np.allclose(np.linalg.eigvalsh(other.matrix(y)), ev, atol=1e-10)


def test_realify_block():
    blk = PSDBlock.from_triples("h", 2, "hermitian", [0, 0, 1], [0, 1, 0], [0, 1, 1], [1.0, 1.0, 0.5j])
    y = np.array([1.0, 0.8])
    H = blk.matrix(y)
    R = blk.realify().matrix(y)
    assert R.shape == (4, 4)
    assert np.allclose(np.sort(np.linalg.eigvalsh(R)), np.sort(np.repeat(np.linalg.eigvalsh(H), 2)))


def test_chain_d1_partition_blocks():
    p = assemble(ModelSpec("chain", 10), RelaxationConfig(d=1, r=1))
    dims = sorted(b.dim for b in p.blocks)
    # M1 holds only the identity; the singles of one axis form a 10-translate orbit
    # whose frequency blocks are 1x1 (6 of the 10 after conjugate dedup)
    assert dims == [1] * 7
    assert assemble(ModelSpec("chain", 10), RelaxationConfig(d=1, r=1, translation_dft=False)).max_block() == 10


def test_chain_d4_max_block():
    model = ModelSpec("chain", 100)
    from spinbound.relaxation import block_ledger
    led = block_ledger(model, RelaxationConfig(d=4, r=1))
    assert led["max_block"] == 31 and led["basis_size"] == 12001
    # every index is accounted for once over all frequencies
    assert led["all_frequency_dim_total"] == led["emitted_parts_size"]
