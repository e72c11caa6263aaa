"""Heisenberg evolution, light cones, exact wall verification, invariant and
conserved algebras, gauged sequences, fragmentation, and chain scanning."""

from __future__ import annotations

from dataclasses import dataclass, field
from math import prod

import numpy as np

from .layout import SystemLayout, as_generator
from .linalg import (
    RANK_TOL,
    ZERO_TOL,
    dagger,
    embed,
    haar_unitary,
    hs_norm,
    nullspace,
    orthonormal_basis,
    partial_trace,
)
from .algebra import (
    MatrixAlgebra,
    OperatorSpace,
    close_algebra,
    commutant,
    contains,
    equals,
    extract_central_factor,
    intersect,
)
from .blocks import BlockStructure, decompose, isomorphism_signature

# residual threshold for "operator has escaped the allowed region"
ESCAPE_TOL = 1e-9


def evolve_op(U: np.ndarray, O: np.ndarray, t: int) -> np.ndarray:
    """Heisenberg evolution U^t O U^-t by repeated conjugation."""
    if t < 0:
        raise ValueError("t must be non-negative")
    O = np.asarray(O, dtype=complex)
    Ud = dagger(U)
    for _ in range(t):
        O = U @ O @ Ud
    return O


def support(O: np.ndarray, layout: SystemLayout, tol: float = ZERO_TOL):
    """Sites where O acts non-trivially, with per-site residuals.

    Site s is excluded iff replacing its factor by the normalized partial
    trace changes O by less than ``tol`` relative to ||O||.
    """
    O = np.asarray(O, dtype=complex)
    norm = hs_norm(O)
    residuals = np.zeros(layout.n_sites)
    if norm < ZERO_TOL:
        return set(), residuals
    for s in range(layout.n_sites):
        reduced = partial_trace(O, {s}, layout) / layout.site_dims[s]
        rest = [q for q in range(layout.n_sites) if q != s]
        lifted = embed(reduced, rest, layout) if rest else reduced * np.eye(layout.dim)
        residuals[s] = hs_norm(O - lifted) / norm
    return {s for s in range(layout.n_sites) if residuals[s] >= tol}, residuals


@dataclass
class LightConeProfile:
    times: list[int]
    support_sets: list[set[int]]
    residuals: np.ndarray  # (t_max + 1, n_sites)

    def to_csv_rows(self):
        rows = []
        for t, sup in zip(self.times, self.support_sets):
            for s in range(self.residuals.shape[1]):
                rows.append((t, s, self.residuals[t, s], int(s in sup)))
        return rows


def lightcone(U, seed_op, layout: SystemLayout, t_max: int, tol: float = ZERO_TOL) -> LightConeProfile:
    """Support of the evolved seed operator for t = 0..t_max."""
    O = np.asarray(seed_op, dtype=complex)
    Ud = dagger(U)
    sets, residuals = [], np.zeros((t_max + 1, layout.n_sites))
    for t in range(t_max + 1):
        sup, res = support(O, layout, tol)
        sets.append(sup)
        residuals[t] = res
        if t < t_max:
            O = U @ O @ Ud
    return LightConeProfile(list(range(t_max + 1)), sets, residuals)


# ---------------------------------------------------------------------------
# wall verification via closure stabilization
# ---------------------------------------------------------------------------


def _check_unitary(U: np.ndarray, d: int):
    U = np.asarray(U, dtype=complex)
    if U.shape != (d, d):
        raise ValueError(f"operator shape {U.shape} does not match dimension {d}")
    if hs_norm(U @ dagger(U) - np.eye(d)) > 1e-8:
        raise ValueError("operator is not unitary")
    return U


def _edge_block_frame(U: np.ndarray, layout: SystemLayout, side: str, tol: float):
    """Orthonormal basis of the edge blocks of U.

    For the left check these are the operators B_iu = (<i|_L x 1) U (|u>_L x 1)
    acting on CR; the closure of M_L-seeded operators is generated by
    sandwiches  B s B'^dag.  The right check mirrors this with R-edge blocks
    acting on LC.
    """
    d_L, d_R = layout.d_left, layout.d_right
    d = layout.dim
    if side == "left":
        d_edge, d_bulk = d_L, d // d_L
        T = U.reshape(d_edge, d_bulk, d_edge, d_bulk)
        blocks = T.transpose(0, 2, 1, 3).reshape(d_edge * d_edge, d_bulk, d_bulk)
    else:
        d_edge, d_bulk = d_R, d // d_R
        T = U.reshape(d_bulk, d_edge, d_bulk, d_edge)
        blocks = T.transpose(1, 3, 0, 2).reshape(d_edge * d_edge, d_bulk, d_bulk)
    return orthonormal_basis(blocks, tol)


def _compress_to_center(X: np.ndarray, d_C: int, d_out: int, side: str):
    """Project bulk operators onto (center x identity) and report residuals.

    X: stacked operators on the bulk (CR for the left check, LC for the
    right).  Returns (center parts, relative residuals, norms)."""
    n = len(X)
    if side == "left":  # bulk = C x R, identity factor on the right
        shaped = X.reshape(n, d_C, d_out, d_C, d_out)
        core = np.trace(shaped, axis1=2, axis2=4) / d_out
        recon = np.einsum("kab,ij->kaibj", core, np.eye(d_out)).reshape(X.shape)
    else:  # bulk = L x C, identity factor on the left
        shaped = X.reshape(n, d_out, d_C, d_out, d_C)
        core = np.trace(shaped, axis1=1, axis2=3) / d_out
        recon = np.einsum("kab,ij->kiajb", core, np.eye(d_out)).reshape(X.shape)
    norms = np.linalg.norm(X.reshape(n, -1), axis=1)
    resid = np.linalg.norm((X - recon).reshape(n, -1), axis=1)
    rel = np.where(norms > ZERO_TOL, resid / np.maximum(norms, ZERO_TOL), 0.0)
    return core, rel, norms


def _directional_closure(U, layout: SystemLayout, side: str, tol: float):
    """Closure of the edge-seeded invariant algebra, tracked by its central
    factor.

    Every algebra between M_edge x 1 and the full algebra is of the form
    M_edge x S; each closure round sandwiches the current S between edge
    blocks of U, rejects as soon as an element escapes (center x identity),
    and otherwise product-closes the compressed span on C.  Returns
    (passed, rounds, central algebra basis or None).
    """
    d_C = layout.d_center
    d_edge = layout.d_left if side == "left" else layout.d_right
    d_bulk = layout.dim // d_edge
    d_out = d_bulk // d_C  # dimension of the identity factor within the bulk
    m = _edge_block_frame(U, layout, side, tol)
    kB = len(m)
    c_layout = SystemLayout(layout.center_dims)
    a = np.eye(d_C, dtype=complex)[None] / np.sqrt(d_C)

    max_rounds = layout.dim**2 + 1
    for rounds in range(1, max_rounds + 1):
        # lift the central basis to the bulk
        if side == "left":
            lifted = np.einsum("kab,ij->kaibj", a, np.eye(d_out)).reshape(
                len(a), d_bulk, d_bulk
            )
        else:
            lifted = np.einsum("kab,ij->kiajb", a, np.eye(d_out)).reshape(
                len(a), d_bulk, d_bulk
            )
        # sandwiches m_p s m_q^dag in memory-bounded chunks, with early exit
        collected = [a]
        chunk = max(1, 2**22 // (d_bulk * d_bulk * max(len(a) * kB, 1)))
        for p0 in range(0, kB, chunk):
            part = np.einsum("pij,ajk->paik", m[p0 : p0 + chunk], lifted)
            part = part.reshape(-1, d_bulk, d_bulk)
            prods = np.einsum("nik,qjk->nqij", part, m.conj())
            prods = prods.reshape(-1, d_bulk, d_bulk)
            core, rel, norms = _compress_to_center(prods, d_C, d_out, side)
            if np.any(rel > tol):
                return False, rounds, None
            collected.append(core[norms > ZERO_TOL])
        new = close_algebra(
            list(np.concatenate(collected)), c_layout, RANK_TOL
        ).basis
        if len(new) == len(a):
            return True, rounds, new
        a = new
    raise RuntimeError("closure failed to stabilize (numerical drift)")


@dataclass
class WallReport:
    left: bool
    right: bool
    stabilization_time: int
    steps_left: int
    steps_right: int
    A_C: MatrixAlgebra | None = None
    B_C: MatrixAlgebra | None = None
    Lbar: MatrixAlgebra | None = None
    Rbar: MatrixAlgebra | None = None
    improper: bool | None = None

    @property
    def is_wall(self) -> bool:
        return self.left and self.right

    def summary(self) -> dict:
        out = {
            "left": self.left,
            "right": self.right,
            "stabilization_time": self.stabilization_time,
        }
        if self.A_C is not None:
            out["dimA"] = self.A_C.dim
        if self.B_C is not None:
            out["dimB"] = self.B_C.dim
        if self.improper is not None:
            out["improper"] = self.improper
        return out


def _edge_factor_algebra(basis_c: np.ndarray, layout: SystemLayout, side: str) -> MatrixAlgebra:
    """Lift a central algebra basis to M_edge x A_C x 1 (or 1 x B_C x M_edge)."""
    d_L, d_R = layout.d_left, layout.d_right
    mats = []
    if side == "left":
        d_e = d_L
        for i in range(d_e):
            for j in range(d_e):
                u = np.zeros((d_e, d_e))
                u[i, j] = 1.0
                for c in basis_c:
                    mats.append(np.kron(np.kron(u, c), np.eye(d_R)))
    else:
        d_e = d_R
        for i in range(d_e):
            for j in range(d_e):
                u = np.zeros((d_e, d_e))
                u[i, j] = 1.0
                for c in basis_c:
                    mats.append(np.kron(np.eye(d_L), np.kron(c, u)))
    basis = orthonormal_basis(np.asarray(mats), RANK_TOL)
    gens = mats[: min(len(mats), 2 * len(basis_c) + 4)]
    alg = MatrixAlgebra(OperatorSpace(basis, layout))
    return alg


def verify_wall(
    U,
    layout: SystemLayout,
    tol: float = ESCAPE_TOL,
    build_algebras: bool = True,
) -> WallReport:
    """Exact wall check by closure stabilization.

    The left check grows the algebra generated by the Heisenberg orbit of
    M_L x 1 and succeeds iff it stays inside M_LC; the right check mirrors
    it.  Central factor algebras are attached on success.
    """
    if not layout.left or not layout.right:
        raise ValueError("wall verification needs non-empty L and R regions")
    U = _check_unitary(U, layout.dim)
    left, s_l, a_basis = _directional_closure(U, layout, "left", tol)
    right, s_r, b_basis = _directional_closure(U, layout, "right", tol)
    report = WallReport(left, right, max(s_l, s_r), s_l, s_r)
    if left:
        c_layout = SystemLayout(layout.center_dims)
        report.A_C = MatrixAlgebra(OperatorSpace(a_basis, c_layout))
        d_C = layout.d_center
        report.improper = report.A_C.dim in (1, d_C * d_C)
    if right:
        c_layout = SystemLayout(layout.center_dims)
        report.B_C = MatrixAlgebra(OperatorSpace(b_basis, c_layout))
    if build_algebras and left and right:
        report.Lbar = _edge_factor_algebra(report.A_C.basis, layout, "left")
        report.Rbar = _edge_factor_algebra(report.B_C.basis, layout, "right")
    return report


@dataclass
class InvariantAlgebras:
    Lbar: MatrixAlgebra
    Rbar: MatrixAlgebra
    A_C: MatrixAlgebra
    B_C: MatrixAlgebra
    stabilization_time: int
    layout: SystemLayout


def _swap_edges(basis: np.ndarray, layout: SystemLayout) -> np.ndarray:
    """Reorder operators from (L, C, R) to (R, C, L) tensor factors."""
    d_L, d_C, d_R = layout.d_left, layout.d_center, layout.d_right
    k = len(basis)
    T = basis.reshape(k, d_L, d_C, d_R, d_L, d_C, d_R)
    T = T.transpose(0, 3, 2, 1, 6, 5, 4)
    return T.reshape(k, layout.dim, layout.dim)


def invariant_algebras(U, layout: SystemLayout, tol: float = ESCAPE_TOL) -> InvariantAlgebras:
    """Invariant algebras of a wall, with the central factors re-extracted
    from the full spans as a consistency check."""
    report = verify_wall(U, layout, tol, build_algebras=True)
    if not report.is_wall:
        raise ValueError(f"not a wall: left={report.left}, right={report.right}")
    A_C = extract_central_factor(report.Lbar.space, layout)
    swapped_layout = SystemLayout(
        (layout.d_right,) + layout.center_dims + (layout.d_left,),
        (0,),
        tuple(range(1, 1 + len(layout.center_dims))),
        (1 + len(layout.center_dims),),
    )
    swapped = OperatorSpace(_swap_edges(report.Rbar.basis, layout), swapped_layout)
    B_C = extract_central_factor(swapped, swapped_layout)
    # the theorem demands the central factors commute pairwise
    for x in A_C.basis:
        for y in B_C.basis:
            if hs_norm(x @ y - y @ x) > 1e-9:
                raise RuntimeError("central factors fail to commute (numerical failure)")
    return InvariantAlgebras(
        report.Lbar, report.Rbar, A_C, B_C, report.stabilization_time, layout
    )


def _edge_generators(layout: SystemLayout, side: str) -> list[np.ndarray]:
    """Clock and shift on the edge factor: two generators of its full algebra."""
    d = layout.d_left if side == "left" else layout.d_right
    shift = np.roll(np.eye(d), 1, axis=0).astype(complex)
    clock = np.diag(np.exp(2j * np.pi * np.arange(d) / d))
    return [shift, clock]


def conserved_algebra(inv: InvariantAlgebras, tol: float = RANK_TOL) -> MatrixAlgebra:
    """C-local conserved charges: the intersection of the two commutants,
    compressed onto C after verifying its support."""
    layout = inv.layout
    d_L, d_C, d_R = layout.d_left, layout.d_center, layout.d_right
    eye_R, eye_L = np.eye(d_R), np.eye(d_L)
    lbar_gens = [
        np.kron(np.kron(g, np.eye(d_C)), eye_R) for g in _edge_generators(layout, "left")
    ] + [np.kron(np.kron(eye_L, a), eye_R) for a in inv.A_C.basis]
    rbar_gens = [
        np.kron(eye_L, np.kron(np.eye(d_C), g)) for g in _edge_generators(layout, "right")
    ] + [np.kron(eye_L, np.kron(b, eye_R)) for b in inv.B_C.basis]
    lbar = MatrixAlgebra(inv.Lbar.space, generators=np.asarray(lbar_gens))
    rbar = MatrixAlgebra(inv.Rbar.space, generators=np.asarray(rbar_gens))
    joint = intersect(commutant(lbar, tol).space, commutant(rbar, tol).space, tol)
    # every element must be 1_L x c x 1_R
    out_sites = tuple(layout.left) + tuple(layout.right)
    c_mats = []
    for x in joint.basis:
        sup, _ = support(x, layout, 1e-8)
        if not sup <= set(layout.center):
            raise RuntimeError(
                "conserved element escapes the center (contradicts the theorem; "
                "numerical failure)"
            )
        c_mats.append(partial_trace(x, out_sites, layout) / (d_L * d_R))
    basis = orthonormal_basis(np.asarray(c_mats), tol)
    return MatrixAlgebra(OperatorSpace(basis, SystemLayout(layout.center_dims)))


@dataclass
class CommutingOpsReport:
    algebra: MatrixAlgebra  # direct computation on C
    predicted_dim: int | None
    match: bool | None
    residual: float | None


def commuting_ops(U, layout: SystemLayout, tol: float = RANK_TOL) -> CommutingOpsReport:
    """C-supported operators commuting with U itself.

    Direct route: kernel of x -> [1 x x x 1, U].  Cross-check (when the wall
    block data is recoverable): direct sum over blocks of the commutants of
    the algebras generated by the Schmidt vectors of T_i (on D) and R_i (on E).
    """
    U = _check_unitary(U, layout.dim)
    d_C = layout.d_center
    cols = []
    for i in range(d_C):
        for j in range(d_C):
            u = np.zeros((d_C, d_C))
            u[i, j] = 1.0
            lifted = np.kron(
                np.kron(np.eye(layout.d_left), u), np.eye(layout.d_right)
            )
            cols.append((lifted @ U - U @ lifted).ravel())
    M = np.asarray(cols).T
    kern = nullspace(M, tol)
    mats = kern.T.reshape(-1, d_C, d_C)
    basis = orthonormal_basis(mats, tol)
    direct = MatrixAlgebra(OperatorSpace(basis, SystemLayout(layout.center_dims)))

    predicted_dim, match, residual = None, None, None
    try:
        from .walls import recover_blocks, schmidt_factor_algebras

        report = verify_wall(U, layout, build_algebras=False)
        if report.is_wall:
            from .layout import SeededRng

            bs = decompose(report.A_C, SeededRng(0, 977))
            T_blocks, R_blocks, perm = recover_blocks(U, layout, bs)
            if perm == list(range(len(bs.blocks))):
                pred = _predicted_commuting_basis(
                    bs, T_blocks, R_blocks, layout, tol
                )
                predicted_dim = len(pred)
                pred_space = OperatorSpace(pred, SystemLayout(layout.center_dims))
                match = equals(direct.space, pred_space)
                residual = max(
                    (
                        hs_norm(x - pred_space.project(x))
                        for x in direct.basis
                    ),
                    default=0.0,
                )
    except Exception:
        pass
    return CommutingOpsReport(direct, predicted_dim, match, residual)


def _predicted_commuting_basis(bs, T_blocks, R_blocks, layout, tol):
    """Basis of ⊕_i Comm(T-Schmidt algebra on D_i) x Comm(R-Schmidt on E_i),
    lifted back through the block frame V."""
    from .walls import schmidt_factor_algebras

    d_C = layout.d_center
    mats = []
    for off, (dD, dE), T, R in zip(
        bs.block_offsets(), bs.blocks, T_blocks, R_blocks
    ):
        commT, commR = schmidt_factor_algebras(
            T, R, layout.d_left, layout.d_right, dD, dE, tol
        )
        for x in commT.basis:
            for y in commR.basis:
                full = np.zeros((d_C, d_C), dtype=complex)
                full[off : off + dD * dE, off : off + dD * dE] = np.kron(x, y)
                mats.append(bs.V @ full @ dagger(bs.V))
    return orthonormal_basis(np.asarray(mats), tol)


@dataclass
class GaugedSequenceReport:
    spaces: list[OperatorSpace]
    signatures: list[tuple]
    all_equal: bool


def gauged_sequence(wall, gauges, rng=None, tol: float = RANK_TOL) -> GaugedSequenceReport:
    """Evolve the left-invariant algebra through a gauged wall sequence
    U~_tau = G_tau^dag U G_{tau-1} and report isomorphism signatures.

    ``gauges`` lists G_0 .. G_T; G_0 must preserve the Lbar span.
    """
    U, layout = np.asarray(wall.U, dtype=complex), wall.layout
    inv = invariant_algebras(U, layout)
    lbar = inv.Lbar
    G0 = np.asarray(gauges[0], dtype=complex)
    for x in lbar.basis:
        moved = G0 @ x @ dagger(G0)
        if hs_norm(moved - lbar.space.project(moved)) > 1e-9:
            raise ValueError("G_0 does not preserve the left-invariant algebra")
    current = MatrixAlgebra(
        OperatorSpace(
            orthonormal_basis(
                np.asarray([G0 @ x @ dagger(G0) for x in lbar.basis]), tol
            ),
            layout,
        )
    )
    rng = as_generator(rng if rng is not None else 0)
    spaces = [current.space]
    signatures = [isomorphism_signature(decompose(current, rng))]
    for tau in range(1, len(gauges)):
        Ut = dagger(np.asarray(gauges[tau], dtype=complex)) @ U @ np.asarray(
            gauges[tau - 1], dtype=complex
        )
        moved = np.asarray([Ut @ x @ dagger(Ut) for x in current.basis])
        current = MatrixAlgebra(
            OperatorSpace(orthonormal_basis(moved, tol), layout)
        )
        spaces.append(current.space)
        signatures.append(isomorphism_signature(decompose(current, rng)))
    return GaugedSequenceReport(spaces, signatures, all(s == signatures[0] for s in signatures))


@dataclass
class FragmentDecomposition:
    dim_left: int
    dim_right: int
    dim_product: int
    dim_intersection: int
    dim_remainder: int
    intersection_basis: np.ndarray  # on C

    def summary(self) -> dict:
        return {
            "dim_L": self.dim_left,
            "dim_R": self.dim_right,
            "dim_LxR": self.dim_product,
            "dim_I": self.dim_intersection,
            "dim_Fperp": self.dim_remainder,
        }


def fragment_decomposition(inv: InvariantAlgebras) -> FragmentDecomposition:
    """Sector dimensions of the central operator-space splitting."""
    I = intersect(inv.A_C.space, inv.B_C.space)
    d2 = inv.layout.dim ** 2
    dim_I = I.dim
    dim_L = inv.Lbar.dim - dim_I
    dim_R = inv.Rbar.dim - dim_I
    dim_LR = dim_L * dim_R
    dim_rest = d2 - dim_L - dim_R - dim_LR - dim_I
    return FragmentDecomposition(dim_L, dim_R, dim_LR, dim_I, dim_rest, I.basis)


@dataclass
class ScanRecord:
    start: int
    width: int
    left: bool
    right: bool

    @property
    def is_wall(self) -> bool:
        return self.left and self.right


@dataclass
class ScanReport:
    records: list[ScanRecord]

    @property
    def detections(self) -> list[tuple[int, int]]:
        return [(r.start, r.width) for r in self.records if r.is_wall]

    @property
    def minimal_windows(self) -> list[tuple[int, int]]:
        """Detections that do not strictly contain another detection."""
        hits = self.detections
        out = []
        for s, w in hits:
            covers_other = any(
                (s2, w2) != (s, w) and s <= s2 and s2 + w2 <= s + w
                for s2, w2 in hits
            )
            if not covers_other:
                out.append((s, w))
        return out


def brickwork_unitary(site_dims, even_gates, odd_gates) -> np.ndarray:
    """Floquet unitary of a two-layer brickwork: even gates on (0,1),(2,3),...
    applied first, odd gates on (1,2),(3,4),... second."""
    layout = SystemLayout(tuple(site_dims))
    n = layout.n_sites
    U = np.eye(layout.dim, dtype=complex)
    for k, g in enumerate(even_gates):
        U = embed(g, (2 * k, 2 * k + 1), layout) @ U
    U_odd = np.eye(layout.dim, dtype=complex)
    for k, g in enumerate(odd_gates):
        U_odd = embed(g, (2 * k + 1, 2 * k + 2), layout) @ U_odd
    return U_odd @ U


def scan_chain(site_dims, even_gates, odd_gates, max_width: int = 2, tol: float = ESCAPE_TOL) -> ScanReport:
    """Verify every candidate central window (width <= max_width) of the
    brickwork Floquet unitary and report the wall windows found."""
    site_dims = tuple(int(d) for d in site_dims)
    n = len(site_dims)
    U = brickwork_unitary(site_dims, even_gates, odd_gates)
    records = []
    for width in range(1, max_width + 1):
        for start in range(1, n - width):
            layout = SystemLayout.chain(site_dims, start, width)
            rep = verify_wall(U, layout, tol, build_algebras=False)
            records.append(ScanRecord(start, width, rep.left, rep.right))
    return ScanReport(records)
