"""Dense matrix and tensor primitives.

Real and complex arrays share one code path; every adjoint goes through
:func:`adj`, which is a plain transpose for real input and a conjugate
transpose for complex input.

Mode indices are zero-based.  The mode-``i`` matricization places mode ``i``
along the rows and enumerates the remaining modes along the columns in
increasing mode order with the lowest remaining mode varying fastest.
"""
from __future__ import annotations

import numpy as np

MAX_ORDER = 8


def adj(M):
    """Adjoint: transpose for real arrays, conjugate transpose for complex."""
    M = np.asarray(M)
    if np.iscomplexobj(M):
        return M.conj().T
    return M.T


def inner(A, B) -> complex | float:
    """Frobenius inner product ``sum(conj(a) * b)``."""
    return np.vdot(np.asarray(A), np.asarray(B))


def frobenius_norm(X) -> float:
    """Frobenius norm of a matrix or tensor of any order."""
    X = np.asarray(X)
    if X.size == 0:
        return 0.0
    return float(np.linalg.norm(X.ravel()))


def _check_finite(M):
    if not np.all(np.isfinite(M)):
        raise ValueError("non-finite input")


def _householder_qr(M):
    # LAPACK geqrf is Householder-based; the sign fix makes diag(R) real and
    # nonnegative so the basis is a deterministic function of M.
    Q, R = np.linalg.qr(M, mode="reduced")
    d = np.diagonal(R).copy()
    mag = np.abs(d)
    phase = np.ones_like(d)
    nz = mag > 0
    phase[nz] = d[nz] / mag[nz]
    Q = Q * phase[np.newaxis, :]
    R = phase.conj()[:, np.newaxis] * R
    return Q, R


def qr_orth(M) -> np.ndarray:
    """Orthonormal basis of a superset of ``range(M)`` for an ``n x k`` matrix, ``k <= n``.

    Householder QR with the triangular factor's diagonal made nonnegative, so
    identical input always yields an identical basis.  All ``k`` columns are
    kept even when ``M`` is rank deficient.
    """
    M = np.asarray(M)
    if M.ndim != 2:
        raise ValueError("qr_orth expects a matrix")
    n, k = M.shape
    if k > n:
        raise ValueError("k exceeds n")
    _check_finite(M)
    return _householder_qr(M)[0]


def qr(M):
    """Sign-normalized reduced QR ``M = Q R`` with ``diag(R) >= 0``.

    Unlike :func:`qr_orth` this accepts wide matrices, returning
    ``min(n, k)`` columns.
    """
    M = np.asarray(M)
    _check_finite(M)
    return _householder_qr(M)


def augmented_basis(new, old) -> np.ndarray:
    """Orthonormal basis of ``range([new | old])``.

    When ``new`` and ``old`` together have more columns than rows, the basis is
    capped at the row count.
    """
    stacked = np.concatenate([new, old], axis=1)
    n, k = stacked.shape
    if k <= n:
        return qr_orth(stacked)
    return qr(stacked)[0][:, :n]


def svd(M):
    """Thin SVD ``M = P @ diag(sigma) @ adj(Q)`` with descending ``sigma``.

    Returns ``(P, sigma, Q)`` with ``Q`` (not its adjoint) as the right factor.
    """
    M = np.asarray(M)
    _check_finite(M)
    P, sigma, Qh = np.linalg.svd(M, full_matrices=False)
    return P, sigma, adj(Qh)


def _check_mode(ndim: int, mode: int):
    if ndim < 1 or ndim > MAX_ORDER:
        raise ValueError(f"tensor order {ndim} outside 1..{MAX_ORDER}")
    if not 0 <= mode < ndim:
        raise ValueError(f"mode {mode} out of range for order {ndim}")


def matricize(T, mode: int) -> np.ndarray:
    """Mode-``mode`` unfolding, shape ``(n_mode, prod(other dims))``."""
    T = np.asarray(T)
    _check_mode(T.ndim, mode)
    return np.reshape(np.moveaxis(T, mode, 0), (T.shape[mode], -1), order="F")


def tensorize(mode: int, M, dims) -> np.ndarray:
    """Inverse of :func:`matricize` for the given mode and target ``dims``."""
    M = np.asarray(M)
    dims = tuple(int(n) for n in dims)
    _check_mode(len(dims), mode)
    rest = dims[:mode] + dims[mode + 1:]
    expected = (dims[mode], int(np.prod(rest, dtype=np.int64)))
    if M.shape != expected:
        raise ValueError(f"shape mismatch: got {M.shape}, expected {expected}")
    T = np.reshape(M, (dims[mode],) + rest, order="F")
    return np.moveaxis(T, 0, mode)


def mode_product(T, mode: int, M) -> np.ndarray:
    """Mode-``mode`` product ``T x_mode M``: ``Mat_mode(result) = M @ Mat_mode(T)``."""
    T = np.asarray(T)
    M = np.asarray(M)
    _check_mode(T.ndim, mode)
    if M.ndim != 2 or M.shape[1] != T.shape[mode]:
        raise ValueError(
            f"shape mismatch: matrix {M.shape} against mode {mode} of size {T.shape[mode]}"
        )
    out = np.tensordot(M, T, axes=([1], [mode]))
    return np.moveaxis(out, 0, mode)


def multi_mode_product(T, matrices, skip: int | None = None) -> np.ndarray:
    """Apply ``T x_i matrices[i]`` over all modes except ``skip``.

    Entries of ``matrices`` may be ``None`` to leave a mode untouched.
    """
    out = np.asarray(T)
    for i, M in enumerate(matrices):
        if i == skip or M is None:
            continue
        out = mode_product(out, i, M)
    return out


def kron_all(matrices) -> np.ndarray:
    """Kronecker product ``matrices[0] ⊗ matrices[1] ⊗ ...``."""
    out = np.ones((1, 1))
    for M in matrices:
        out = np.kron(out, M)
    return out


def lowrank_norm(U, S, V) -> float:
    """Frobenius norm of ``U @ S @ adj(V)`` without forming it.

    ``U`` and ``V`` need not be orthonormal; their triangular factors absorb
    the non-orthogonality.
    """
    Ru = qr(U)[1]
    Rv = qr(V)[1]
    return frobenius_norm(Ru @ S @ adj(Rv))


def lowrank_difference_norm(U1, S1, V1, U2, S2, V2) -> float:
    """Frobenius norm of ``U1 S1 V1^H - U2 S2 V2^H`` in factored form."""
    U = np.concatenate([U1, U2], axis=1)
    V = np.concatenate([V1, V2], axis=1)
    dtype = np.result_type(S1, S2)
    S = np.zeros((S1.shape[0] + S2.shape[0], S1.shape[1] + S2.shape[1]), dtype=dtype)
    S[: S1.shape[0], : S1.shape[1]] = S1
    S[S1.shape[0]:, S1.shape[1]:] = -S2
    return lowrank_norm(U, S, V)


def orthonormality_defect(Q) -> float:
    """``||Q^H Q - I||_F``."""
    Q = np.asarray(Q)
    return frobenius_norm(adj(Q) @ Q - np.eye(Q.shape[1]))
