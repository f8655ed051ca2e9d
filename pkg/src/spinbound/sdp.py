"""SDPA file exchange, solver backends and the energy/observable drivers.

Every backend returns a dual certificate; the reported bound is recomputed from
it so that it stays valid even when the solver stops slightly infeasible (all
moments are expectations of unit-norm words, hence lie in [-1, 1]).
"""
from __future__ import annotations

import math
import os
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np
import scipy.sparse as sp

from .config import RelaxationConfig
from .geometry import Lattice
from .models import ModelSpec
from .moments import LinExpr, PSDBlock, SDPProblem
from .pauli import PauliMonomial
from .symmetry import MomentKey

STATUSES = ("optimal", "near-optimal", "infeasible", "unbounded", "solver-error")
CLARABEL_MAX_SVEC = 4000
CLARABEL_MAX_DIM = 40


class SolverError(RuntimeError):
    """A backend is unavailable or failed outright."""


# ---------------------------------------------------------------------------
# standard form

@dataclass
class StandardForm:
    """``min sign * c.y`` over ``y`` with PSD blocks ``F(y) >= 0``, scalar rows
    ``a.y + b >= 0`` and equality rows ``a.y + b = 0``.

    Scalar and equality rows are sparse matrices whose column 0 holds ``b``.
    """

    n: int
    c: np.ndarray
    c0: float
    sign: float
    blocks: list[PSDBlock]
    scalars: sp.csr_matrix
    scalar_trace: np.ndarray
    eqs: sp.csr_matrix


def _rows(exprs: list[np.ndarray], n: int) -> sp.csr_matrix:
    if not exprs:
        return sp.csr_matrix((0, n + 1))
    return sp.csr_matrix(np.vstack(exprs))


def compile_problem(p: SDPProblem) -> StandardForm:
    n = p.n_vars
    obj = p.dense(p.objective)
    sign = 1.0 if p.sense == "min" else -1.0
    blocks = []
    scal, eq = [], []
    for b in p.blocks:
        if b.kind == "diagonal":
            for v_i in np.unique(b.row):
                m = b.row == v_i
                row = np.zeros(n + 1)
                np.add.at(row, b.var[m], b.val[m])
                scal.append(row)
        else:
            blocks.append(b.realify())
    for e in p.equalities:
        eq.append(p.dense(e))
    if p.box is not None:
        expr, lo, hi = p.box
        v = p.dense(expr)
        lo_row = v.copy()
        lo_row[0] -= lo
        hi_row = -v
        hi_row[0] += hi
        scal += [lo_row, hi_row]
    for i in p.unit_box:
        for s in (1.0, -1.0):
            row = np.zeros(n + 1)
            row[0] = 1.0
            row[i] = s
            scal.append(row)
    S = _rows(scal, n)
    trace = np.asarray(abs(S[:, 1:]).sum(axis=1)).ravel() + S[:, 0].toarray().ravel() if S.shape[0] else np.zeros(0)
    return StandardForm(n, obj[1:], obj[0], sign, blocks, S, trace, _rows(eq, n))


def block_trace_bound(b: PSDBlock, n: int) -> float:
    """Upper bound on ``tr F(y)`` for ``|y_i| <= 1``."""
    diag = b.row == b.col
    tr = np.zeros(n + 1)
    np.add.at(tr, b.var[diag], b.val[diag])
    return float(tr[0] + np.abs(tr[1:]).sum())


def block_adjoint(b: PSDBlock, Z: np.ndarray, n: int) -> np.ndarray:
    """``<F_i, Z>`` for i = 0..n."""
    w = np.where(b.row == b.col, 1.0, 2.0)
    out = np.zeros(n + 1)
    np.add.at(out, b.var, b.val * w * Z[b.row, b.col])
    return out


def certified_bound(sf: StandardForm, Zs: list[np.ndarray], z_scalar: np.ndarray,
                    mu: np.ndarray) -> tuple[float, float]:
    """Valid bound on the objective (lower for min, upper for max) from any dual
    point, and the plain dual objective.

    Negative eigenvalues of the dual matrices are charged against the trace of
    their blocks and the dual residual against ``|y| <= 1``.
    """
    n = sf.n
    r = sf.sign * sf.c.copy()
    val = 0.0
    for b, Z in zip(sf.blocks, Zs):
        adj = block_adjoint(b, Z, n)
        r -= adj[1:]
        val -= adj[0]
    if sf.scalars.shape[0]:
        S = sf.scalars
        r -= S[:, 1:].T @ z_scalar
        val -= float(S[:, 0].toarray().ravel() @ z_scalar)
    if sf.eqs.shape[0]:
        E = sf.eqs
        r -= E[:, 1:].T @ mu
        val -= float(E[:, 0].toarray().ravel() @ mu)
    plain = val
    for b, Z in zip(sf.blocks, Zs):
        lam = float(np.linalg.eigvalsh(Z)[0]) if Z.size else 0.0
        val += min(0.0, lam) * block_trace_bound(b, n)
    if sf.scalars.shape[0]:
        val += float(np.minimum(z_scalar, 0.0) @ sf.scalar_trace)
    val -= float(np.abs(r).sum())
    return sf.sign * val + sf.c0, sf.sign * plain + sf.c0


def violations(p: SDPProblem, y: np.ndarray) -> dict[str, float]:
    """Most negative block eigenvalue and largest equality residual at ``y``."""
    min_eig = math.inf
    for b in p.blocks:
        m = b.realify().matrix(y)
        if b.kind == "diagonal":
            min_eig = min(min_eig, float(np.min(np.diag(m))))
        else:
            min_eig = min(min_eig, float(np.linalg.eigvalsh(m)[0]))
    eq = max((abs(float(p.dense(e) @ y)) for e in p.equalities), default=0.0)
    if p.box is not None:
        v = float(p.dense(p.box[0]) @ y)
        min_eig = min(min_eig, v - p.box[1], p.box[2] - v)
    if p.unit_box:
        min_eig = min(min_eig, float(1 - np.max(np.abs(y[p.unit_box]))))
    return {"min_eig": min_eig, "eq_residual": eq}


# ---------------------------------------------------------------------------
# solution

@dataclass
class Solution:
    status: str
    objective: float
    values: dict[MomentKey, float]
    solver_name: str
    iterations: int = 0
    time: float = 0.0
    bound: float = math.nan
    dual_objective: float = math.nan
    message: str = ""
    sense: str = "min"
    y: np.ndarray | None = None
    checks: dict = field(default_factory=dict)
    n_sites: int = 0

    @property
    def ok(self) -> bool:
        return self.status in ("optimal", "near-optimal")

    @property
    def per_spin(self) -> float:
        """Certified bound divided by the number of spins."""
        return self.bound / self.n_sites if self.n_sites else math.nan

    def report(self) -> dict:
        return {
            "status": self.status, "objective": self.objective, "bound": self.bound,
            "dual_objective": self.dual_objective, "per_spin": self.per_spin, "solver": self.solver_name,
            "iterations": self.iterations, "time": self.time, "sense": self.sense,
            "min_eig": self.checks.get("min_eig"), "eq_residual": self.checks.get("eq_residual"),
            "message": self.message,
        }


def _finish(p: SDPProblem, sf: StandardForm, status: str, y, Zs, zs, mu, name, iters, elapsed, msg,
            feas_tol) -> Solution:
    if status not in ("optimal", "near-optimal"):
        return Solution(status, math.nan, {}, name, iters, elapsed, math.nan, math.nan, msg, p.sense)
    y_full = np.concatenate([[1.0], y])
    obj = float(p.dense(p.objective) @ y_full)
    checks = violations(p, y_full)
    bound, dual_obj = certified_bound(sf, Zs, zs, mu)
    if status == "optimal" and (checks["min_eig"] < -feas_tol or checks["eq_residual"] > feas_tol):
        status = "near-optimal"
    values = dict(zip(p.variables, y.tolist()))
    return Solution(status, obj, values, name, iters, elapsed, bound, dual_obj, msg, p.sense, y_full, checks)


def _trivial(p: SDPProblem, sf: StandardForm, feas_tol: float) -> Solution:
    """No free variables: check feasibility directly."""
    y = np.ones(1)
    checks = violations(p, y)
    ok = checks["min_eig"] >= -feas_tol and checks["eq_residual"] <= feas_tol
    if not ok:
        return Solution("infeasible", math.nan, {}, "direct", message="constant constraints violated", sense=p.sense)
    obj = float(p.dense(p.objective)[0])
    return Solution("optimal", obj, {}, "direct", bound=obj, dual_objective=obj, sense=p.sense, y=y, checks=checks)


# ---------------------------------------------------------------------------
# clarabel backend

def _svec_index(i: np.ndarray, j: np.ndarray) -> np.ndarray:
    # column-major upper triangle
    return j * (j + 1) // 2 + i


def solve_clarabel(p: SDPProblem, feas_tol: float = 1e-7, gap_tol: float = 1e-8, sf: StandardForm | None = None) -> Solution:
    try:
        import clarabel
    except ImportError as exc:  # pragma: no cover
        raise SolverError("clarabel backend unavailable") from exc
    sf = sf or compile_problem(p)
    n = sf.n
    if n == 0:
        return _trivial(p, sf, feas_tol)
    rows, cols, vals, b = [], [], [], []
    cones = []
    off = 0
    if sf.eqs.shape[0]:
        E = sf.eqs.tocoo()
        m = E.col > 0
        rows.append(E.row[m] + off)
        cols.append(E.col[m] - 1)
        vals.append(E.data[m])
        b.append(-sf.eqs[:, 0].toarray().ravel())
        cones.append(clarabel.ZeroConeT(sf.eqs.shape[0]))
        off += sf.eqs.shape[0]
    if sf.scalars.shape[0]:
        S = sf.scalars.tocoo()
        m = S.col > 0
        rows.append(S.row[m] + off)
        cols.append(S.col[m] - 1)
        vals.append(-S.data[m])
        b.append(sf.scalars[:, 0].toarray().ravel())
        cones.append(clarabel.NonnegativeConeT(sf.scalars.shape[0]))
        off += sf.scalars.shape[0]
    block_offsets = []
    for blk in sf.blocks:
        t = blk.dim * (blk.dim + 1) // 2
        idx = _svec_index(blk.row, blk.col)
        scale = np.where(blk.row == blk.col, 1.0, math.sqrt(2.0))
        const = blk.var == 0
        bb = np.zeros(t)
        np.add.at(bb, idx[const], blk.val[const] * scale[const])
        m = ~const
        rows.append(idx[m] + off)
        cols.append(blk.var[m] - 1)
        vals.append(-blk.val[m] * scale[m])
        b.append(bb)
        cones.append(clarabel.PSDTriangleConeT(blk.dim))
        block_offsets.append(off)
        off += t
    A = sp.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(off, n))
    P = sp.csc_matrix((n, n))
    q = sf.sign * sf.c
    settings = clarabel.DefaultSettings()
    settings.verbose = False
    settings.tol_gap_abs = gap_tol
    settings.tol_gap_rel = gap_tol
    settings.tol_feas = min(feas_tol, 1e-8)
    settings.max_iter = 400
    t0 = time.perf_counter()
    try:
        solver = clarabel.DefaultSolver(P, q, A, np.concatenate(b), cones, settings)
        res = solver.solve()
    except Exception as exc:  # solver-side failures are reported, not raised
        return Solution("solver-error", math.nan, {}, "clarabel", message=str(exc), sense=p.sense)
    elapsed = time.perf_counter() - t0
    st = str(res.status)
    status = {"Solved": "optimal", "AlmostSolved": "near-optimal", "PrimalInfeasible": "infeasible",
              "AlmostPrimalInfeasible": "infeasible", "DualInfeasible": "unbounded",
              "AlmostDualInfeasible": "unbounded"}.get(st, "solver-error")
    if status in ("solver-error",) and len(res.x) and np.all(np.isfinite(res.x)):
        status = "near-optimal"
    z = np.asarray(res.z)
    x = np.asarray(res.x)
    k = 0
    mu = z[k:k + sf.eqs.shape[0]]
    k += sf.eqs.shape[0]
    zs = z[k:k + sf.scalars.shape[0]]
    Zs = []
    for blk, o in zip(sf.blocks, block_offsets):
        n_b = blk.dim
        iu, ju = np.triu_indices(n_b)
        # iterate column-major upper triangle
        order = np.lexsort((iu, ju))
        iu, ju = iu[order], ju[order]
        t = n_b * (n_b + 1) // 2
        zz = z[o:o + t] / np.where(iu == ju, 1.0, math.sqrt(2.0))
        Z = np.zeros((n_b, n_b))
        Z[iu, ju] = zz
        Z[ju, iu] = zz
        Zs.append(Z)
    return _finish(p, sf, status, x, Zs, zs, mu, "clarabel", int(res.iterations), elapsed, st, feas_tol)


# ---------------------------------------------------------------------------
# SDPA files

HEADER = "* spinbound"


def _diagonal_block(sf: StandardForm) -> PSDBlock | None:
    """Scalar rows and both signs of every equality row as one diagonal block."""
    mats = [sf.scalars]
    if sf.eqs.shape[0]:
        E = sf.eqs
        mats.append(sp.vstack([sp.vstack([E[i], -E[i]]) for i in range(E.shape[0])]).tocsr())
    M = sp.vstack(mats).tocoo() if any(m.shape[0] for m in mats) else None
    if M is None or M.shape[0] == 0:
        return None
    return PSDBlock.from_triples("diag", M.shape[0], "diagonal", M.col, M.row, M.row, M.data)


def export_sdpa(p: SDPProblem, destination) -> None:
    """Write the problem in sparse SDPA format, ``sum F_i y_i - F_0 >= 0``.

    Scalar constraints, both sides of each equality and the objective window go
    into one trailing diagonal block; variable names, sense and the objective
    constant are kept in leading comment lines.
    """
    sf = compile_problem(p)
    blocks = list(sf.blocks)
    diag = _diagonal_block(sf)
    if diag is not None:
        blocks.append(diag)
    lines = [HEADER,
             f"* lattice: {p.lattice.dim} {p.lattice.L}" if p.lattice else "* lattice: none",
             f"* sense: {p.sense}",
             f"* objective_constant: {sf.c0:.17g}",
             f"* label: {p.label}"]
    lines += [f"* y{i + 1}: {k.render(p.lattice) if p.lattice else k.letters}" for i, k in enumerate(p.variables)]
    lines.append(str(sf.n))
    lines.append(str(len(blocks)))
    lines.append(" ".join(str(-b.dim if b.kind == "diagonal" else b.dim) for b in blocks))
    lines.append(" ".join(f"{v:.17g}" for v in sf.sign * sf.c) if sf.n else "")
    for bi, b in enumerate(blocks, start=1):
        order = np.lexsort((b.col, b.row, b.var))
        for o in order:
            v, i, j, x = int(b.var[o]), int(b.row[o]), int(b.col[o]), float(b.val[o])
            if v == 0:
                x = -x
            lines.append(f"{v} {bi} {i + 1} {j + 1} {x:.17g}")
    text = "\n".join(lines) + "\n"
    if hasattr(destination, "write"):
        destination.write(text)
    else:
        Path(destination).write_text(text)


def import_sdpa(source) -> SDPProblem:
    """Read a sparse SDPA file (as written by ``export_sdpa`` or any other producer)."""
    text = source.read() if hasattr(source, "read") else Path(source).read_text()
    meta = {}
    names = {}
    body = []
    for line in text.splitlines():
        s = line.strip()
        if not s:
            continue
        if s[0] in "*\"":
            if ":" in s:
                key, _, val = s[1:].partition(":")
                key = key.strip()
                if key.startswith("y") and key[1:].isdigit():
                    names[int(key[1:])] = val.strip()
                else:
                    meta[key] = val.strip()
            continue
        body.append(s.replace(",", " ").replace("{", " ").replace("}", " ").replace("(", " ").replace(")", " "))
    m = int(body[0].split()[0])
    nblocks = int(body[1].split()[0])
    sizes = [int(float(x)) for x in body[2].split()][:nblocks]
    obj_line = body[3].split() if m else []
    c = np.array([float(x) for x in obj_line[:m]])
    lattice = None
    if meta.get("lattice", "none") != "none":
        dim, L = (int(x) for x in meta["lattice"].split())
        lattice = Lattice(dim, L)
    entries = [[] for _ in sizes]
    for s in body[4:] if m else body[3:]:
        parts = s.split()
        v, bi, i, j, x = int(parts[0]), int(parts[1]), int(parts[2]), int(parts[3]), float(parts[4])
        entries[bi - 1].append((v, i - 1, j - 1, -x if v == 0 else x))
    blocks = []
    for bi, (size, ent) in enumerate(zip(sizes, entries), start=1):
        arr = np.array(ent, dtype=float).reshape(-1, 4)
        kind = "diagonal" if size < 0 else "real"
        blk = PSDBlock.from_triples(f"block{bi}", abs(size), kind, arr[:, 0].astype(np.int64),
                                    arr[:, 1].astype(np.int64), arr[:, 2].astype(np.int64), arr[:, 3])
        blocks.append(blk)
    variables = []
    for i in range(1, m + 1):
        name = names.get(i)
        if name is not None and lattice is not None:
            variables.append(MomentKey(PauliMonomial.parse(name, lattice).letters))
        else:
            variables.append(MomentKey((-i,)))
    sense = meta.get("sense", "min")
    sign = 1.0 if sense == "min" else -1.0
    c0 = float(meta.get("objective_constant", 0.0))
    objective = LinExpr(c0, {k: sign * ci for k, ci in zip(variables, c)})
    return SDPProblem(variables, objective, blocks, [], None, sense, [], lattice, meta.get("label", ""))


# ---------------------------------------------------------------------------
# SDPA backend

def solve_sdpa(p: SDPProblem, feas_tol: float = 1e-7, gap_tol: float = 1e-8, sf: StandardForm | None = None,
               keep_file: str | None = None) -> Solution:
    """Solve by writing an SDPA file and handing it to the SDPA solver."""
    try:
        import sdpap
        from sdpap.param import param
        from sdpap.sdpacall import sdpacall
    except ImportError as exc:  # pragma: no cover
        raise SolverError("sdpa backend unavailable (install sdpa-python)") from exc
    sf = sf or compile_problem(p)
    if sf.n == 0:
        return _trivial(p, sf, feas_tol)
    fd, path = tempfile.mkstemp(suffix=".dat-s")
    os.close(fd)
    try:
        export_sdpa(p, path)
        A, b, c, K, J = sdpap.importsdpa(path)
        option = param({"print": "no", "epsilonStar": float(gap_tol), "epsilonDash": float(feas_tol),
                        "maxIteration": 200, "numThreads": 1}, sdpacall.get_backend_info()["gmp"])
        t0 = time.perf_counter()
        # the file maps onto SDPA's own primal directly, so the solver core is
        # called without sdpap's format conversions
        x, y, _, info = sdpacall.solve_sdpa(A, b, c, K, option)
        elapsed = time.perf_counter() - t0
    except Exception as exc:
        return Solution("solver-error", math.nan, {}, "sdpa", message=str(exc), sense=p.sense)
    finally:
        if keep_file:
            os.replace(path, keep_file)
        elif os.path.exists(path):
            os.remove(path)
    phase = str(info.get("phasevalue", ""))
    # SDPA calls the matrix-variable side "primal", which is the dual of the
    # moment problem; one-sided feasibility (pFEAS, dFEAS) is not a solution
    status = {"pdOPT": "optimal", "pdFEAS": "near-optimal", "pINF_dFEAS": "unbounded",
              "pFEAS_dINF": "infeasible", "pdINF": "infeasible", "pUNBD": "infeasible",
              "dUNBD": "unbounded"}.get(phase, "solver-error")
    yv = np.asarray(y.toarray() if sp.issparse(y) else y, dtype=float).ravel()
    xv = np.asarray(x.toarray() if sp.issparse(x) else x, dtype=float).ravel()
    # diagonal entries come first, then every PSD block as a full n x n array
    diag = _diagonal_block(sf)
    n_diag = diag.dim if diag is not None else 0
    zdiag = xv[:n_diag]
    Zs = []
    off = n_diag
    for blk in sf.blocks:
        d = blk.dim
        Z = xv[off:off + d * d].reshape(d, d)
        Zs.append(0.5 * (Z + Z.T))
        off += d * d
    n_scal = sf.scalars.shape[0]
    zs = zdiag[:n_scal]
    pairs = zdiag[n_scal:].reshape(-1, 2) if sf.eqs.shape[0] else np.zeros((0, 2))
    mu = pairs[:, 0] - pairs[:, 1]
    return _finish(p, sf, status, yv, Zs, zs, mu, "sdpa", int(info.get("iteration", 0)), elapsed, phase, feas_tol)


# ---------------------------------------------------------------------------
# drivers

def choose_backend(p: SDPProblem, sf: StandardForm) -> str:
    """Clarabel for small cones, SDPA once the PSD blocks get large.

    Clarabel factors a dense Hessian per PSD cone, which stops paying off beyond a
    few thousand svec entries in total.
    """
    svec = sum(b.dim * (b.dim + 1) // 2 for b in sf.blocks)
    big = max((b.dim for b in sf.blocks), default=0)
    return "clarabel" if svec <= CLARABEL_MAX_SVEC and big <= CLARABEL_MAX_DIM else "sdpa"


def solve(p: SDPProblem, backend: str = "auto", feas_tol: float = 1e-7, gap_tol: float = 1e-8) -> Solution:
    sf = compile_problem(p)
    name = choose_backend(p, sf) if backend == "auto" else backend
    if name == "clarabel":
        sol = solve_clarabel(p, feas_tol, gap_tol, sf)
    elif name == "sdpa":
        sol = solve_sdpa(p, feas_tol, gap_tol, sf)
    else:
        raise SolverError(f"unknown backend {backend!r}")
    sol.n_sites = p.lattice.n_sites if p.lattice else 0
    return sol


def bound_energy(model: ModelSpec, cfg: RelaxationConfig, problem: SDPProblem | None = None) -> Solution:
    """Lower bound on the ground energy; ``per_spin`` gives it per site."""
    from .relaxation import assemble

    p = problem or assemble(model, cfg)
    return solve(p, cfg.solver, cfg.feas_tol, cfg.gap_tol)


def bound_observable(model: ModelSpec, cfg: RelaxationConfig, obs: LinExpr, Elb: float, Eub: float,
                     sense: str = "min", problem: SDPProblem | None = None) -> Solution:
    """Bound ``l(obs)`` over the relaxation restricted to ``Elb <= l(H) <= Eub``."""
    from .relaxation import assemble

    if Elb > Eub:
        raise ValueError(f"energy window is empty: Elb={Elb} > Eub={Eub}")
    if sense not in ("min", "max"):
        raise ValueError(f"sense must be min or max, got {sense!r}")
    base = problem or assemble(model, cfg)
    variables = list(base.variables)
    index = set(variables)
    for k in obs.terms:
        if k not in index:
            variables.append(k)
            index.add(k)
    extra = list(range(base.n_vars + 1, len(variables) + 1))
    p = SDPProblem(variables, obs, base.blocks, base.equalities, (base.objective, Elb, Eub), sense,
                   base.unit_box + extra, base.lattice, base.label)
    return solve(p, cfg.solver, cfg.feas_tol, cfg.gap_tol)
