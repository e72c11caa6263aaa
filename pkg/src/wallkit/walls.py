"""Wall-unitary synthesis: random walls over a block structure, brickwork
two-gate factorizations, conditional unitaries, the catalogue presets, and
normaliser sampling."""

from __future__ import annotations

from dataclasses import dataclass, field
from math import prod

import numpy as np

from .layout import SeededRng, SystemLayout, as_generator
from .linalg import RANK_TOL, dagger, embed, haar_unitary, hs_norm, orthonormal_basis
from .algebra import MatrixAlgebra, OperatorSpace, close_algebra, commutant
from .blocks import BlockStructure, decompose
from . import dynamics

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli_string(s: str) -> np.ndarray:
    """Tensor product of single-qubit Paulis, e.g. "ZX" -> Z (x) X."""
    out = np.eye(1, dtype=complex)
    for ch in s.strip():
        if ch not in PAULI:
            raise ValueError(f"invalid Pauli letter {ch!r} in {s!r} (use I, X, Y, Z)")
        out = np.kron(out, PAULI[ch])
    return out


@dataclass
class WallSpec:
    """Recipe for a wall: layout, central algebra, block content, wiring."""

    layout: SystemLayout
    central_algebra: object = "diag"  # "diag" | "full" | "pauli:XI,ZX" | matrices
    block_mode: str = "haar"
    permutation: list[int] | None = None
    seed: int = 0
    T_blocks: list | None = None  # used when block_mode == "given"
    R_blocks: list | None = None

    def to_json(self) -> dict:
        alg = self.central_algebra
        if isinstance(alg, str):
            alg_json = alg
        else:
            alg_json = {
                "matrices": [
                    np.stack([np.asarray(m).real, np.asarray(m).imag], axis=-1).tolist()
                    for m in alg
                ]
            }
        return {
            "dims": {
                "L": self.layout.d_left,
                "C": list(self.layout.center_dims),
                "R": self.layout.d_right,
            },
            "algebra": alg_json,
            "block_mode": self.block_mode,
            "permutation": self.permutation,
            "seed": self.seed,
        }


def resolve_central_algebra(spec: WallSpec, tol: float = RANK_TOL) -> MatrixAlgebra:
    """Build the central algebra named (or listed) by the spec, on C."""
    c_layout = SystemLayout(spec.layout.center_dims)
    d_C = c_layout.dim
    alg = spec.central_algebra
    if isinstance(alg, str):
        if alg == "diag":
            gens = [np.diag(np.arange(d_C, dtype=complex))]
        elif alg == "full":
            shift = np.roll(np.eye(d_C), 1, axis=0).astype(complex)
            clock = np.diag(np.exp(2j * np.pi * np.arange(d_C) / d_C))
            gens = [shift, clock]
        elif alg.startswith("pauli:"):
            if any(d != 2 for d in c_layout.site_dims):
                raise ValueError("Pauli generators need a qubit central region")
            gens = [pauli_string(s) for s in alg[len("pauli:") :].split(",")]
            if any(g.shape != (d_C, d_C) for g in gens):
                raise ValueError("Pauli string length does not match central sites")
        else:
            raise ValueError(f"unknown central algebra name {alg!r}")
    else:
        gens = [np.asarray(g, dtype=complex) for g in alg]
        if any(g.shape != (d_C, d_C) for g in gens):
            raise ValueError("central generators must act on C only")
    return close_algebra(gens, c_layout, tol)


@dataclass
class WallUnitary:
    """A verified wall unitary together with its structural data."""

    U: np.ndarray
    layout: SystemLayout
    A_C: MatrixAlgebra
    block_structure: BlockStructure
    T_blocks: list
    R_blocks: list
    permutation: list[int]
    trivial: bool = False
    name: str | None = None


def assemble_wall(layout: SystemLayout, bs: BlockStructure, T_blocks, R_blocks, permutation=None) -> np.ndarray:
    """Assemble U = (1 x V x 1) [⊕_i T^i x R^i, block-permuted] (1 x V x 1)^dag.

    T^i acts on L x D_i, R^i on E_i x R; block i feeds the slot permutation[i]
    (which must have the same dimensions)."""
    d_L, d_C, d_R = layout.d_left, layout.d_center, layout.d_right
    nb = bs.n_blocks
    perm = list(range(nb)) if permutation is None else list(permutation)
    if sorted(perm) != list(range(nb)):
        raise ValueError("permutation must be a permutation of block indices")
    for i, j in enumerate(perm):
        if bs.blocks[i] != bs.blocks[j]:
            raise ValueError(
                f"not an automorphism: blocks {i} and {j} have different dimensions"
            )
    offs = bs.block_offsets()
    frame = np.zeros((d_L, d_C, d_R, d_L, d_C, d_R), dtype=complex)
    for i, (dD, dE) in enumerate(bs.blocks):
        m = dD * dE
        T = np.asarray(T_blocks[i], dtype=complex)
        R = np.asarray(R_blocks[i], dtype=complex)
        if T.shape != (d_L * dD, d_L * dD) or R.shape != (dE * d_R, dE * d_R):
            raise ValueError(f"block {i} unitaries have wrong dimensions")
        X = np.kron(T, R).reshape(d_L, m, d_R, d_L, m, d_R)
        frame[:, offs[perm[i]] : offs[perm[i]] + m, :, :, offs[i] : offs[i] + m, :] = X
    U_frame = frame.reshape(layout.dim, layout.dim)
    W = np.kron(np.kron(np.eye(d_L), bs.V), np.eye(d_R))
    return W @ U_frame @ dagger(W)


def recover_blocks(U, layout: SystemLayout, bs: BlockStructure, tol: float = 1e-8):
    """Invert the wall structure: read T^i, R^i and the block permutation off
    a wall unitary in the frame of its central block structure."""
    d_L, d_C, d_R = layout.d_left, layout.d_center, layout.d_right
    W = np.kron(np.kron(np.eye(d_L), bs.V), np.eye(d_R))
    Uf = (dagger(W) @ U @ W).reshape(d_L, d_C, d_R, d_L, d_C, d_R)
    offs = bs.block_offsets()
    T_blocks, R_blocks, perm = [], [], []
    for j, (dD, dE) in enumerate(bs.blocks):
        m = dD * dE
        target = None
        for i, (dD2, dE2) in enumerate(bs.blocks):
            if (dD2, dE2) != (dD, dE):
                continue
            B = Uf[:, offs[i] : offs[i] + m, :, :, offs[j] : offs[j] + m, :]
            if np.linalg.norm(B) > 1e-6:
                target = i
                break
        if target is None:
            raise ValueError("no target block found; input is not in wall form")
        B = Uf[:, offs[target] : offs[target] + m, :, :, offs[j] : offs[j] + m, :]
        # split B = T (x) R across (L, D) | (E, R) by a rank-1 operator-Schmidt cut
        M = B.reshape(d_L, dD, dE, d_R, d_L, dD, dE, d_R)
        M = M.transpose(0, 1, 4, 5, 2, 3, 6, 7).reshape(
            (d_L * dD) ** 2, (dE * d_R) ** 2
        )
        u, s, vh = np.linalg.svd(M)
        if s.size > 1 and s[1] > tol * s[0]:
            raise ValueError("block is not a tensor product; not a wall frame")
        T = (np.sqrt(s[0]) * u[:, 0]).reshape(d_L * dD, d_L * dD)
        R = (np.sqrt(s[0]) * vh[0]).reshape(dE * d_R, dE * d_R)
        # normalize the scalar split so both factors are unitary
        scale = np.sqrt(d_L * dD) / np.linalg.norm(T)
        T, R = T * scale, R / scale
        T_blocks.append(T)
        R_blocks.append(R)
        perm.append(target)
    # report in source order: perm[j] = slot fed by block j
    if sorted(perm) != list(range(bs.n_blocks)):
        raise ValueError("recovered block wiring is not a permutation")
    recon = assemble_wall(layout, bs, T_blocks, R_blocks, perm)
    if np.linalg.norm(recon - U) > tol * np.sqrt(layout.dim):
        raise ValueError("block recovery failed to reproduce the unitary")
    return T_blocks, R_blocks, perm


def schmidt_factor_algebras(T, R, d_L, d_R, dD, dE, tol: float = RANK_TOL):
    """Commutants of the algebras generated by the operator-Schmidt vectors of
    T (on the D side) and R (on the E side)."""
    M = np.asarray(T).reshape(d_L, dD, d_L, dD).transpose(0, 2, 1, 3).reshape(
        d_L * d_L, dD * dD
    )
    _, s, vh = np.linalg.svd(M, full_matrices=False)
    r = int(np.sum(s > tol * s[0]))
    gensT = vh[:r].reshape(r, dD, dD)
    algT = close_algebra(list(gensT), SystemLayout((dD,)), tol)
    N = np.asarray(R).reshape(dE, d_R, dE, d_R).transpose(0, 2, 1, 3).reshape(
        dE * dE, d_R * d_R
    )
    u, s2, _ = np.linalg.svd(N, full_matrices=False)
    r2 = int(np.sum(s2 > tol * s2[0]))
    gensR = u[:, :r2].T.reshape(r2, dE, dE)
    algR = close_algebra(list(gensR), SystemLayout((dE,)), tol)
    return commutant(algT), commutant(algR)


def synth_wall(spec: WallSpec, rng=None, verify: bool = True) -> WallUnitary:
    """Synthesize a wall over the spec's central algebra.

    Haar mode draws T^i ~ Haar(d_L dim_D_i) and R^i ~ Haar(dim_E_i d_R);
    "given" mode takes the spec's blocks.  The result is wall-verified.
    """
    base = SeededRng(spec.seed) if rng is None else rng
    g = as_generator(base)
    layout = spec.layout
    A_C = resolve_central_algebra(spec)
    bs = decompose(A_C, g)
    if spec.block_mode == "haar":
        T_blocks = [haar_unitary(layout.d_left * dD, g) for dD, _ in bs.blocks]
        R_blocks = [haar_unitary(dE * layout.d_right, g) for _, dE in bs.blocks]
    elif spec.block_mode == "given":
        T_blocks = [np.asarray(t, dtype=complex) for t in spec.T_blocks]
        R_blocks = [np.asarray(r, dtype=complex) for r in spec.R_blocks]
    else:
        raise ValueError(f"unknown block mode {spec.block_mode!r}")
    U = assemble_wall(layout, bs, T_blocks, R_blocks, spec.permutation)
    perm = list(spec.permutation) if spec.permutation else list(range(bs.n_blocks))
    d_C = layout.d_center
    wall = WallUnitary(
        U, layout, A_C, bs, T_blocks, R_blocks, perm,
        trivial=A_C.dim in (1, d_C * d_C),
    )
    if verify:
        _assert_wall(wall)
    return wall


def _assert_wall(wall: WallUnitary):
    report = dynamics.verify_wall(wall.U, wall.layout)
    if not report.is_wall:
        raise RuntimeError(
            f"synthesized unitary failed the wall check: left={report.left}, "
            f"right={report.right}"
        )


def brickwork_split(spec: WallSpec, rng=None, permutation_V=None, permutation_W=None):
    """Two-gate factorization U = W_CR V_LC of a wall over the spec's algebra.

    In the block frame, V_LC = ⊕ T~^i x r^i x 1_R and W_CR = ⊕ 1_L x t^i x R~^i
    with independent block permutations allowed on each gate.
    """
    base = SeededRng(spec.seed) if rng is None else rng
    g = as_generator(base)
    layout = spec.layout
    d_L, d_R = layout.d_left, layout.d_right
    A_C = resolve_central_algebra(spec)
    bs = decompose(A_C, g)
    Tt = [haar_unitary(d_L * dD, g) for dD, _ in bs.blocks]
    r_small = [haar_unitary(dE, g) for _, dE in bs.blocks]
    t_small = [haar_unitary(dD, g) for dD, _ in bs.blocks]
    Rt = [haar_unitary(dE * d_R, g) for _, dE in bs.blocks]
    V_LC = assemble_wall(
        layout, bs, Tt, [np.kron(r, np.eye(d_R)) for r in r_small], permutation_V
    )
    W_CR = assemble_wall(
        layout, bs,
        [np.kron(np.eye(d_L), t) for t in t_small], Rt, permutation_W,
    )
    U = W_CR @ V_LC
    # composite blocks in source order: block j passes through both gates
    pV = list(permutation_V) if permutation_V else list(range(bs.n_blocks))
    pW = list(permutation_W) if permutation_W else list(range(bs.n_blocks))
    perm = [pW[pV[j]] for j in range(bs.n_blocks)]
    T_blocks, R_blocks, perm_rec = recover_blocks(U, layout, bs)
    d_C = layout.d_center
    wall = WallUnitary(
        U, layout, A_C, bs, T_blocks, R_blocks, perm_rec,
        trivial=A_C.dim in (1, d_C * d_C),
    )
    _assert_wall(wall)
    return V_LC, W_CR, wall


def conditional_unitary(eigenbasis, branches, control_first: bool = False) -> np.ndarray:
    """Bipartite conditional gate sum_i xi_i (x) |i><i| (or the mirrored
    |i><i| (x) xi_i when control_first), with |i> the given control basis."""
    vecs = np.asarray(eigenbasis, dtype=complex)
    if vecs.ndim != 2 or vecs.shape[0] != vecs.shape[1]:
        raise ValueError("eigenbasis must be a square array of basis vectors (rows)")
    dc = vecs.shape[0]
    if len(branches) != dc:
        raise ValueError("need one branch unitary per control basis vector")
    if hs_norm(vecs @ dagger(vecs) - np.eye(dc)) > 1e-10:
        raise ValueError("control eigenbasis is not orthonormal")
    out = None
    for v, b in zip(vecs, branches):
        b = np.asarray(b, dtype=complex)
        if hs_norm(b @ dagger(b) - np.eye(b.shape[0])) > 1e-10:
            raise ValueError("branch is not unitary")
        proj = np.outer(v, v.conj())
        term = np.kron(proj, b) if control_first else np.kron(b, proj)
        out = term if out is None else out + term
    return out


# ---------------------------------------------------------------------------
# catalogue presets
# ---------------------------------------------------------------------------

PRESET_NAMES = (
    "abelian-pair",
    "reducible-composite",
    "soliton-x",
    "uncoupled-center",
    "swap-zz",
    "fswap",
    "nonabelian-cnot",
)


def _finish_preset(U, layout, A_C, seed_rng, name) -> WallUnitary:
    """Common tail: decompose the central algebra, recover block data, verify."""
    bs = decompose(A_C, seed_rng)
    T_blocks, R_blocks, perm = recover_blocks(U, layout, bs)
    d_C = layout.d_center
    wall = WallUnitary(
        U, layout, A_C, bs, T_blocks, R_blocks, perm,
        trivial=A_C.dim in (1, d_C * d_C), name=name,
    )
    _assert_wall(wall)
    return wall


def preset_wall(name: str, dims=None, seed: int = 0) -> WallUnitary:
    """Catalogue walls on qubit-scale systems.

    Each preset fixes a concrete wiring of the pictured gates; all presets
    are wall-verified at construction time.  ``dims`` = (d_L, d_R) overrides
    the edge dimensions where the construction generalizes (conditional-gate
    presets); the central region is fixed per preset.
    """
    rng = SeededRng(seed, 101)
    g = rng.generator()
    d_L, d_R = (2, 2) if dims is None else (int(dims[0]), int(dims[1]))

    if name == "abelian-pair":
        # two conditional gates sharing a diagonal control on the central qubit
        layout = SystemLayout.tripartite(d_L, (2,), d_R)
        xi = [haar_unitary(d_L, g) for _ in range(2)]
        zeta = [haar_unitary(d_R, g) for _ in range(2)]
        V = embed(conditional_unitary(np.eye(2), xi), (0, 1), layout)
        W = embed(conditional_unitary(np.eye(2), zeta, control_first=True), (1, 2), layout)
        U = W @ V
        A_C = close_algebra([PAULI["Z"]], SystemLayout((2,)))
        return _finish_preset(U, layout, A_C, rng, name)

    if name == "reducible-composite":
        # the wall splits over a two-qubit center: each edge couples only to
        # its nearest central qubit
        layout = SystemLayout.tripartite(d_L, (2, 2), d_R)
        xi = [haar_unitary(d_L, g) for _ in range(2)]
        zeta = [haar_unitary(d_R, g) for _ in range(2)]
        V = embed(conditional_unitary(np.eye(2), xi), (0, 1), layout)
        W = embed(conditional_unitary(np.eye(2), zeta, control_first=True), (2, 3), layout)
        U = W @ V
        A_C = close_algebra(
            [np.kron(PAULI["Z"], np.eye(2))], SystemLayout((2, 2))
        )
        return _finish_preset(U, layout, A_C, rng, name)

    if name == "soliton-x":
        # central bit-flip between the conditionals: Z_C -> -Z_C -> Z_C orbit
        layout = SystemLayout.tripartite(d_L, (2,), d_R)
        xi = [haar_unitary(d_L, g) for _ in range(2)]
        zeta = [haar_unitary(d_R, g) for _ in range(2)]
        V = embed(conditional_unitary(np.eye(2), xi), (0, 1), layout)
        W = embed(conditional_unitary(np.eye(2), zeta, control_first=True), (1, 2), layout)
        X_C = embed(PAULI["X"], (1,), layout)
        U = W @ X_C @ V
        A_C = close_algebra([PAULI["Z"]], SystemLayout((2,)))
        return _finish_preset(U, layout, A_C, rng, name)

    if name == "uncoupled-center":
        # middle central qubit touched by nothing: its full algebra is conserved
        layout = SystemLayout.tripartite(d_L, (2, 2, 2), d_R)
        xi = [haar_unitary(d_L, g) for _ in range(2)]
        zeta = [haar_unitary(d_R, g) for _ in range(2)]
        V = embed(conditional_unitary(np.eye(2), xi), (0, 1), layout)
        W = embed(conditional_unitary(np.eye(2), zeta, control_first=True), (3, 4), layout)
        U = W @ V
        A_C = close_algebra(
            [np.kron(PAULI["Z"], np.eye(4))], SystemLayout((2, 2, 2))
        )
        return _finish_preset(U, layout, A_C, rng, name)

    if name == "swap-zz":
        # central SWAP-and-phase gate shuttles the two diagonal controls
        layout = SystemLayout.tripartite(d_L, (2, 2), d_R)
        xi = [haar_unitary(d_L, g) for _ in range(2)]
        zeta = [haar_unitary(d_R, g) for _ in range(2)]
        V = embed(conditional_unitary(np.eye(2), xi), (0, 1), layout)
        W = embed(conditional_unitary(np.eye(2), zeta, control_first=True), (2, 3), layout)
        swap = np.array(
            [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
        )
        zz = np.diag([1, -1, -1, 1]).astype(complex)
        mid = embed(swap @ zz, (1, 2), layout)
        U = W @ mid @ V
        A_C = close_algebra(
            [np.diag(np.arange(4, dtype=complex))], SystemLayout((2, 2))
        )
        return _finish_preset(U, layout, A_C, rng, name)

    if name == "fswap":
        # fermionic swap between controlled-X couplings to either edge
        if (d_L, d_R) != (2, 2):
            raise ValueError("fswap preset is defined on qubit edges")
        layout = SystemLayout.tripartite(2, (2, 2), 2)
        # V: control on L, X on the near central qubit (an element of A_C)
        V = conditional_unitary(np.eye(2), [np.eye(2), PAULI["X"]], control_first=True)
        V = embed(V, (0, 1), layout)
        # W: control on R, X on the far central qubit (commutant of A_C)
        W = conditional_unitary(np.eye(2), [np.eye(2), PAULI["X"]])
        W = embed(W, (2, 3), layout)
        fswap = np.array(
            [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, -1]], dtype=complex
        )
        U = W @ embed(fswap, (1, 2), layout) @ V
        A_C = close_algebra(
            [pauli_string("XI"), pauli_string("ZX")], SystemLayout((2, 2))
        )
        return _finish_preset(U, layout, A_C, rng, name)

    if name == "nonabelian-cnot":
        # generic synthesis over the non-Abelian two-qubit Pauli algebra
        spec = WallSpec(
            SystemLayout.tripartite(d_L, (2, 2), d_R),
            central_algebra="pauli:XI,ZX",
            seed=seed,
        )
        wall = synth_wall(spec)
        wall.name = name
        return wall

    raise ValueError(f"unknown preset {name!r}; choose from {PRESET_NAMES}")


def normaliser_sample(alg: MatrixAlgebra, rng, bs: BlockStructure | None = None) -> np.ndarray:
    """Random element of the normaliser group of the algebra: a product of an
    inner automorphism, a commutant unitary, and a permutation of equivalent
    blocks, assembled in the block frame."""
    g = as_generator(rng)
    if bs is None:
        bs = decompose(alg, g)
    d = alg.layout.dim
    offs = bs.block_offsets()
    # random permutation within groups of equal-(dD, dE) blocks
    perm = list(range(bs.n_blocks))
    groups: dict[tuple[int, int], list[int]] = {}
    for i, b in enumerate(bs.blocks):
        groups.setdefault(b, []).append(i)
    for idxs in groups.values():
        shuffled = list(g.permutation(idxs))
        for i, j in zip(idxs, shuffled):
            perm[i] = j
    frame = np.zeros((d, d), dtype=complex)
    for i, (dD, dE) in enumerate(bs.blocks):
        m = dD * dE
        u = haar_unitary(dD, g)  # inner part
        w = haar_unitary(dE, g)  # commutant part
        frame[offs[perm[i]] : offs[perm[i]] + m, offs[i] : offs[i] + m] = np.kron(u, w)
    return bs.V @ frame @ dagger(bs.V)
