"""Assembly of the moment relaxation for a model and a configuration."""
from __future__ import annotations

import numpy as np

from .basis import MonomialBasis, PartitionedBasis, build_1d, build_2d, partition
from .config import RelaxationConfig
from .constraints import (RdmSpec, commutator_equalities, optimality_basis, optimality_blocks, rdm_blocks)
from .models import ModelSpec, hamiltonian
from .moments import BlockBuilder, KeyRegistry, OrbitLayout, PSDBlock, SDPProblem, entry_terms
from .symmetry import MomentKey, SymmetryGroup


def symmetry_group(model: ModelSpec, cfg: RelaxationConfig) -> SymmetryGroup:
    return SymmetryGroup(model.lattice, translations=cfg.translation_dft, point_group=cfg.point_group,
                         axis_permutation=cfg.axis_permutation, sign_model=cfg.sign_model,
                         sign_hamiltonian=cfg.sign_hamiltonian)


def model_basis(model: ModelSpec, cfg: RelaxationConfig) -> MonomialBasis:
    if model.lattice.dim == 1:
        return build_1d(model.L, cfg.d, cfg.r)
    return build_2d(model.L, cfg.d)


def moment_parts(pb: PartitionedBasis, cfg: RelaxationConfig) -> list[tuple[str, list]]:
    """Index sets of the emitted moment blocks.

    Signature blocks 2, 3 and 4 are images of each other under axis permutations,
    so only block 2 is kept when that symmetry is on.
    """
    if not cfg.sign_model:
        return [("M", pb.all_entries())]
    parts = (1, 2) if cfg.axis_permutation else (1, 2, 3, 4)
    return [(f"M{i}", pb.part(i)) for i in parts if pb.part(i)]


def commutator_words(basis: MonomialBasis, preset: str):
    if preset == "none":
        return []
    limit = {"deg2": 2, "deg3": 3, "basis": None}[preset]
    return [m for m in basis if limit is None or m.degree <= limit]


def assemble(model: ModelSpec, cfg: RelaxationConfig) -> SDPProblem:
    """The symmetry-reduced relaxation ``min l(H)`` with every block and equality
    requested by ``cfg``."""
    cfg.validate()
    group = symmetry_group(model, cfg)
    registry = KeyRegistry()
    builder = BlockBuilder(group, registry, parity=cfg.conjugate, dft=cfg.translation_dft, realify=cfg.realify)
    basis = model_basis(model, cfg)
    pb = partition(basis)
    blocks: list[PSDBlock] = []
    for label, part in moment_parts(pb, cfg):
        blocks.extend(builder.build(label, part))
    for k in cfg.rdm_k:
        blocks.extend(rdm_blocks(RdmSpec(k), model.lattice, group, registry, realify=cfg.realify))
    bounded = {int(v) for b in blocks for v in b.variables()}
    if cfg.optimality_psd:
        if cfg.optimality_basis == "deg2":
            ob = commutator_words(basis, "deg2")
        else:
            ob = optimality_basis(model, cfg.optimality_basis)
        blocks.extend(optimality_blocks(model, ob, builder, split=cfg.sign_model,
                                        dedup_axes=cfg.axis_permutation))
    objective = hamiltonian(model, group)
    equalities = commutator_equalities(model, commutator_words(basis, cfg.commutator_basis), group)
    for expr in [objective, *equalities]:
        for key in expr.terms:
            registry.id(key)
    # every moment is an expectation of a unit-norm word; keys not already
    # bounded through a moment or density-matrix block get |y| <= 1 explicitly
    unit_box = [i for i in range(1, len(registry) + 1) if i not in bounded]
    return SDPProblem(list(registry.keys), objective, blocks, equalities, None, "min", unit_box,
                      model.lattice, f"{model} d={cfg.d} r={cfg.r}")


def assemble_unreduced(model: ModelSpec, d: int, r: int = 1) -> SDPProblem:
    """Dense reference relaxation: one moment block over the whole basis, one
    variable per distinct word, complex entries realified wholesale."""
    cfg = RelaxationConfig(d=d, r=r)
    basis = model_basis(model, cfg)
    group = SymmetryGroup.trivial(model.lattice)
    registry = KeyRegistry()
    words = [m.letters for m in basis]
    V, R, C, X = [], [], [], []
    for a, v in enumerate(words):
        for b in range(a, len(words)):
            for key, c in entry_terms(v, words[b], group, parity=False):
                V.append(registry.id(key) if key.letters else 0)
                R.append(a)
                C.append(b)
                X.append(c)
    block = PSDBlock.from_triples("M", len(words), "hermitian", V, R, C, X).realify()
    objective = hamiltonian(model, group)
    for key in objective.terms:
        registry.id(key)
    bounded = set(int(v) for v in block.variables())
    unit_box = [i for i in range(1, len(registry) + 1) if i not in bounded]
    return SDPProblem(list(registry.keys), objective, [block], [], None, "min", unit_box, model.lattice,
                      f"{model} unreduced d={d} r={r}")


def block_ledger(model: ModelSpec, cfg: RelaxationConfig) -> dict:
    """Block counts and sizes at each reduction stage, without building entries."""
    cfg.validate()
    basis = model_basis(model, cfg)
    pb = partition(basis)
    sizes = pb.sizes()
    ledger = {
        "basis_size": len(basis),
        "sign_blocks": [sizes[i] for i in (1, 2, 3, 4)],
        "sign_max": max(sizes.values()),
    }
    parts = moment_parts(pb, cfg)
    ledger["emitted_parts"] = [label for label, _ in parts]
    dims, real_dims = [], []
    n_blocks = 0
    total = 0
    for label, part in parts:
        letters = [m.letters for m in part]
        if cfg.translation_dft:
            layout = OrbitLayout.from_monomials(model.lattice, letters)
        else:
            layout = OrbitLayout.trivial(model.lattice, letters)
        for k in layout.frequencies(dedup=False):
            total += len(layout.allowed(k))
        for k in layout.frequencies():
            n = len(layout.allowed(k))
            if not n:
                continue
            n_blocks += 1
            dims.append(n)
            real = layout.self_conjugate(k) and cfg.conjugate
            real_dims.append(n if real else 2 * n)
    ledger.update({
        "frequency_blocks": n_blocks,
        "max_block": max(dims),
        "max_block_realified": max(real_dims),
        "sum_block_dims": sum(dims),
        "sum_realified_dims": sum(real_dims),
        "all_frequency_dim_total": total,
        "emitted_parts_size": sum(len(p) for _, p in parts),
    })
    return ledger
