"""Dense tensor-product linear algebra: embedding, partial trace, Haar
sampling, and rank/nullspace decisions with explicit tolerances.

Conventions fixed project-wide: row-major indexing with site 0 as the most
significant tensor index, Hilbert-Schmidt inner product <A, B> = tr(A^dag B),
relative rank tolerance ``RANK_TOL`` and absolute zero-test ``ZERO_TOL``
on unit-norm data.
"""

from __future__ import annotations

from math import prod

import numpy as np

from .layout import SystemLayout, as_generator

# default tolerances; every decision point takes an override argument
RANK_TOL = 1e-9
ZERO_TOL = 1e-10


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def hs_inner(a: np.ndarray, b: np.ndarray) -> complex:
    """Hilbert-Schmidt inner product tr(a^dag b)."""
    return complex(np.sum(a.conj() * b))


def hs_norm(a: np.ndarray) -> float:
    return float(np.linalg.norm(a))


def comm(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product; the first factor carries the most significant index."""
    return np.kron(np.asarray(a), np.asarray(b))


def kron_all(factors) -> np.ndarray:
    out = np.asarray(factors[0], dtype=complex)
    for f in factors[1:]:
        out = np.kron(out, f)
    return out


def embed(op: np.ndarray, sites, layout: SystemLayout) -> np.ndarray:
    """Place `op` on the given sites (ascending order), identity elsewhere.

    `op` acts on the tensor product of the named sites in increasing
    site order; the result acts on the full layout.
    """
    op = np.asarray(op, dtype=complex)
    sites = sorted(int(s) for s in sites)
    dims = layout.site_dims
    if any(s < 0 or s >= layout.n_sites for s in sites):
        raise ValueError(f"sites {sites} outside layout with {layout.n_sites} sites")
    d_sites = prod(dims[s] for s in sites)
    if op.shape != (d_sites, d_sites):
        raise ValueError(
            f"operator shape {op.shape} does not match site dims product {d_sites}"
        )
    rest = [s for s in range(layout.n_sites) if s not in sites]
    d_rest = prod(dims[s] for s in rest) if rest else 1
    full = np.kron(op, np.eye(d_rest))
    # full is ordered (sites..., rest...); permute tensor legs back to layout order
    order = sites + rest
    perm = np.argsort(order)
    shaped = full.reshape([dims[s] for s in order] * 2)
    n = layout.n_sites
    shaped = shaped.transpose(list(perm) + [p + n for p in perm])
    return np.ascontiguousarray(shaped.reshape(layout.dim, layout.dim))


def partial_trace(O: np.ndarray, sites_out, layout: SystemLayout) -> np.ndarray:
    """Trace out the given sites; returns a matrix on the remaining sites
    (original site order).  Tracing out everything gives a 1x1 matrix [tr O].
    """
    O = np.asarray(O, dtype=complex)
    sites_out = sorted(set(int(s) for s in sites_out))
    dims = layout.site_dims
    n = layout.n_sites
    keep = [s for s in range(n) if s not in sites_out]
    T = O.reshape(dims * 2)
    for k, s in enumerate(sites_out):
        ax = s - sum(1 for q in sites_out[:k] if q < s)
        T = np.trace(T, axis1=ax, axis2=ax + T.ndim // 2)
    d_keep = prod(dims[s] for s in keep) if keep else 1
    return T.reshape(d_keep, d_keep)


def haar_unitary(dim: int, rng) -> np.ndarray:
    """Haar-distributed unitary via complex Ginibre + QR with phase fix."""
    if dim < 1:
        raise ValueError("dim must be >= 1")
    g = as_generator(rng)
    z = (g.standard_normal((dim, dim)) + 1j * g.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    ph = np.diag(r).copy()
    ph /= np.abs(ph)
    return q * ph[None, :]


def orthonormal_basis(mats, tol: float = RANK_TOL) -> np.ndarray:
    """HS-orthonormal basis of the span of the input matrices.

    Accepts a list of matrices or a stacked (k, m, n) array; returns a
    stacked (r, m, n) array.  Rank is decided by singular values above
    ``tol`` times the largest one.  All-zero input gives an empty stack.
    """
    stack = np.asarray(mats, dtype=complex)
    if stack.ndim == 2:
        stack = stack[None]
    k, m, n = stack.shape
    flat = stack.reshape(k, m * n)
    if k == 0 or not np.any(flat):
        return np.zeros((0, m, n), dtype=complex)
    _, s, vh = np.linalg.svd(flat, full_matrices=False)
    r = int(np.sum(s > tol * s[0]))
    return vh[:r].reshape(r, m, n)


def nullspace(M: np.ndarray, tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal kernel basis (columns) with ||M v|| <= tol * scale.

    The scale floors at 1 so that a matrix consisting purely of numerical
    noise (for instance a commutator map of an identity-plus-noise operator)
    is treated as zero instead of having its noise promoted to rank.
    """
    M = np.asarray(M, dtype=complex)
    if M.size == 0:
        return np.eye(M.shape[1], dtype=complex)
    _, s, vh = np.linalg.svd(M, full_matrices=True)
    norm = s[0] if s.size else 0.0
    if norm == 0.0:
        return np.eye(M.shape[1], dtype=complex)
    rank = int(np.sum(s > tol * max(norm, 1.0)))
    return vh[rank:].conj().T


def random_hermitian_in_span(basis: np.ndarray, rng) -> np.ndarray:
    """Random Hermitian element of an adjoint-closed span (stacked basis)."""
    g = as_generator(rng)
    c = g.standard_normal(len(basis)) + 1j * g.standard_normal(len(basis))
    x = np.tensordot(c, basis, axes=(0, 0))
    return (x + dagger(x)) / 2


def projector_onto(basis: np.ndarray) -> np.ndarray:
    """Orthogonal projector (on vectorized operators) onto a stacked span."""
    k, m, n = basis.shape
    flat = basis.reshape(k, m * n)
    return flat.conj().T @ flat


def project_span(basis: np.ndarray, O: np.ndarray) -> np.ndarray:
    """Orthogonal projection of O onto the span of a stacked orthonormal basis."""
    coeff = np.tensordot(basis.conj(), O, axes=([1, 2], [0, 1]))
    return np.tensordot(coeff, basis, axes=(0, 0))
