import numpy as np
import pytest

from spinbound.basis import build_1d
from spinbound.config import RelaxationConfig
from spinbound.constraints import (RdmSpec, commutator_equalities, commutator_expr, default_windows,
                                   optimality_basis, optimality_blocks, optimality_kernel, rdm_blocks,
                                   rdm_matrix, sector_sizes)
from spinbound.geometry import Lattice
from spinbound.models import ModelSpec
from spinbound.moments import BlockBuilder, KeyRegistry, entry_terms
from spinbound.oracle import moment_values
from spinbound.pauli import CapacityError, PauliMonomial, matrix_rep
from spinbound.relaxation import assemble, symmetry_group
from spinbound.symmetry import SymmetryGroup

from conftest import ground_state


def oracle_y(registry, family, L, J2=0.0):
    return registry.vector(moment_values(ground_state(family, L, J2), registry.keys))


# ---------------------------------------------------------------- RDM

def test_sector_sizes():
    assert sector_sizes(2) == {-1.0: 1, 0.0: 2, 1.0: 1}
    assert sorted(sector_sizes(4).values()) == [1, 1, 4, 4, 6]


@pytest.mark.parametrize("k", [1, 2, 3, 4])
def test_rdm_trace_and_hermiticity(k):
    lat = Lattice.chain(8)
    for group in (SymmetryGroup(lat), SymmetryGroup.trivial(lat)):
        reg = KeyRegistry()
        blk = rdm_matrix(tuple(range(k)), group, reg)
        y = np.zeros(len(reg) + 1)
        y[0] = 1.0
        assert np.trace(blk.matrix(y)).real == pytest.approx(1.0, abs=1e-15)
        # symbolic Hermiticity: each coefficient matrix is Hermitian
        for j in range(len(reg) + 1):
            A = blk.coefficient_matrix(j)
            assert np.array_equal(A, A.conj().T)


def test_rdm_single_site_constant():
    lat = Lattice.chain(6)
    reg = KeyRegistry()
    blocks = rdm_blocks(RdmSpec(1), lat, SymmetryGroup(lat), reg, realify=False)
    # sign symmetry kills every single-site moment: rho = I/2, sector m = +1/2 kept
    assert len(blocks) == 1 and blocks[0].dim == 1
    assert blocks[0].matrix(np.ones(1))[0, 0] == pytest.approx(0.5)


def test_rdm_matches_partial_trace():
    lat = Lattice.chain(6)
    gs = ground_state("chain", 6)
    reg = KeyRegistry()
    blk = rdm_matrix((0, 1, 2), SymmetryGroup(lat), reg)
    psi = gs.vector.reshape(8, 8)
    rho = psi @ psi.conj().T
    assert np.allclose(blk.matrix(oracle_y(reg, "chain", 6)), rho, atol=1e-10)


def test_rdm_sectors_dimensions():
    lat = Lattice.chain(8)
    reg = KeyRegistry()
    blocks = rdm_blocks(RdmSpec(4), lat, SymmetryGroup(lat), reg, realify=False)
    assert sorted(b.dim for b in blocks) == [1, 4, 6]
    full = rdm_blocks(RdmSpec(4), lat, SymmetryGroup.trivial(lat), reg, realify=False)
    assert sorted(b.dim for b in full) == [1, 1, 4, 4, 6]


def test_rdm_windows():
    assert default_windows(Lattice.square(4), 4)[1] == (0, 1, 4, 5)
    with pytest.raises(ValueError):
        RdmSpec(6)
    with pytest.raises(ValueError):
        default_windows(Lattice.chain(3), 4)


# ---------------------------------------------------------------- commutators

def test_commutator_trivial_under_symmetry():
    # averaging l([H, u]) over a symmetry orbit of u cancels it for these models,
    # so the equalities only carry information once the reductions are off
    model = ModelSpec("chain", 8)
    basis = list(build_1d(8, 2, 1))
    assert commutator_equalities(model, basis, SymmetryGroup(model.lattice)) == []
    unsigned = SymmetryGroup(model.lattice, sign_model=False, sign_hamiltonian=False)
    assert commutator_equalities(model, basis, unsigned) == []


@pytest.mark.parametrize("L", [4, 6, 8])
def test_commutator_equalities_hold_at_oracle(L):
    model = ModelSpec("chain", L)
    group = SymmetryGroup.trivial(model.lattice)
    basis = list(build_1d(L, 2, 1))
    eqs = commutator_equalities(model, basis, group)
    assert eqs
    gs = ground_state("chain", L)
    for e in eqs:
        assert abs(e.evaluate(moment_values(gs, e.keys()))) <= 1e-10


def test_commutator_single_z():
    # [H, Z1] only involves the two bonds at site 1; the result is a two-site combination
    model = ModelSpec("chain", 4)
    group = SymmetryGroup.trivial(model.lattice)
    expr = commutator_expr(model.terms(), (3,), group)
    assert expr.terms and all(len(k.letters) == 2 for k in expr.terms)
    gs = ground_state("chain", 4)
    assert abs(expr.evaluate(moment_values(gs, expr.keys()))) <= 1e-12


def test_commutator_expr_matches_matrices():
    model = ModelSpec("chain", 4)
    lat = model.lattice
    group = SymmetryGroup.trivial(lat)
    H = sum(c * matrix_rep(PauliMonomial(w, lat), 4) for c, w in model.terms())
    u = PauliMonomial.parse("X1 X2", lat)
    U = matrix_rep(u, 4)
    expr = commutator_expr(model.terms(), u.letters, group)
    C = (H @ U - U @ H) / 1j
    rebuilt = sum(c * matrix_rep(PauliMonomial(k.letters, lat), 4) for k, c in expr.terms.items())
    assert np.allclose(C, rebuilt, atol=1e-12)


# ---------------------------------------------------------------- optimality

def test_optimality_identity_entry_zero():
    model = ModelSpec("chain", 4)
    kernel = optimality_kernel(model.terms())
    group = SymmetryGroup(model.lattice)
    total = {}
    for key, c in entry_terms((), (), group, kernel):
        total[key] = total.get(key, 0.0) + c
    assert all(abs(c) < 1e-15 for c in total.values())


def test_optimality_block_chain4():
    model = ModelSpec("chain", 4)
    basis = optimality_basis(model, "singles")
    assert len(basis) == 13
    lat = model.lattice
    group = SymmetryGroup(lat, translations=False, point_group=False, axis_permutation=False, sign_model=False,
                          sign_hamiltonian=False)
    reg = KeyRegistry()
    builder = BlockBuilder(group, reg, parity=False, dft=False, realify=False)
    blocks = optimality_blocks(model, basis, builder, split=False)
    assert [b.dim for b in blocks] == [13]
    M = blocks[0].matrix(oracle_y(reg, "chain", 4))
    assert np.linalg.eigvalsh(M)[0] >= -1e-9
    # direct oracle: <psi| v H v* |psi> - E <psi| v v* |psi> on the diagonal
    gs = ground_state("chain", 4)
    psi = gs.vector
    H = sum(c * matrix_rep(PauliMonomial(w, lat), 4) for c, w in model.terms())
    for i, v in enumerate(basis):
        V = matrix_rep(v, 4).conj().T
        direct = psi.conj() @ (V.conj().T @ H @ V) @ psi - gs.energy * (psi.conj() @ V.conj().T @ V @ psi)
        assert M[i, i].real == pytest.approx(direct.real, abs=1e-10)


def test_optimality_capacity():
    model = ModelSpec("chain", 8)
    big = [PauliMonomial.parse("X1 X2 X3 X4", model.lattice)]
    builder = BlockBuilder(SymmetryGroup(model.lattice), KeyRegistry())
    with pytest.raises(CapacityError, match="X1 X2 X3 X4"):
        optimality_blocks(model, big, builder)


# ---------------------------------------------------------------- everything at once

def oracle_feasibility(L, cfg):
    model = ModelSpec("chain", L)
    p = assemble(model, cfg)
    y = p.vector(moment_values(ground_state("chain", L), p.variables))
    worst = min(np.linalg.eigvalsh(b.matrix(y))[0] for b in p.blocks)
    residual = max((abs(e.evaluate(moment_values(ground_state("chain", L), e.keys()))) for e in p.equalities),
                   default=0.0)
    return worst, residual, p


@pytest.mark.parametrize("L", [4, 6, 8])
def test_oracle_feasibility(L):
    full = RelaxationConfig(d=3, r=2, rdm_k=[2, 3, 4], optimality_psd=True, commutator_basis="basis")
    worst, residual, p = oracle_feasibility(L, full)
    assert worst >= -1e-9 and residual <= 1e-10
    assert any(b.label.startswith("opt") for b in p.blocks)
    bare = RelaxationConfig(d=2, r=1, sign_model=False, sign_hamiltonian=False, conjugate=False,
                            translation_dft=False, point_group=False, axis_permutation=False,
                            commutator_basis="deg2", realify=False)
    worst, residual, p = oracle_feasibility(L, bare)
    assert p.equalities and worst >= -1e-9 and residual <= 1e-10


def test_optimality_deg2_preset_feasible():
    # with r = 2 the degree-2 words include distance-2 pairs that nn lacks
    cfg = RelaxationConfig(d=2, r=2, optimality_psd=True, optimality_basis="deg2")
    worst, _, p = oracle_feasibility(6, cfg)
    assert worst >= -1e-9
    opt_dims = sum(b.dim for b in p.blocks if b.label.startswith("opt"))
    nn_dims = sum(b.dim for b in oracle_feasibility(6, cfg.replace(optimality_basis="nn"))[2].blocks
                  if b.label.startswith("opt"))
    assert opt_dims > nn_dims
