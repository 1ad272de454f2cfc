"""Rank-adaptive low-rank integrator for Tucker tensors ``Y = C x_1 U_1 ... x_d U_d``.

Per mode ``i`` the K-step evolves ``K_i = U_i S_i`` where
``Mat_i(C)^H = W_i S_i^H``.  Its right-hand side
``Mat_i(F(t, Ten_i(K_i W_i^H) x_{j!=i} U_j)) conj(⊗_{j!=i} U_j) W_i`` is
evaluated by mode products and never forms the ``n_i x prod(n_j)`` frame.
The core is then evolved by Galerkin projection onto the augmented bases and
truncated mode by mode with budget ``theta / d`` each.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .linalg import (
    adj,
    augmented_basis,
    frobenius_norm,
    matricize,
    multi_mode_product,
    qr,
    svd,
    tensorize,
)
from .matrix_dlr import TruncationPolicy, tail_rank
from .rk import SubstepDiverged, SubstepMethod, rk_integrate


@dataclass
class TuckerFactor:
    core: np.ndarray
    bases: list

    @property
    def ranks(self) -> tuple[int, ...]:
        return tuple(self.core.shape)

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(U.shape[0] for U in self.bases)

    @property
    def order(self) -> int:
        return self.core.ndim

    def reconstruct(self) -> np.ndarray:
        return multi_mode_product(self.core, self.bases)

    def norm(self) -> float:
        return frobenius_norm(self.core)

    def astype(self, dtype) -> "TuckerFactor":
        return TuckerFactor(self.core.astype(dtype), [U.astype(dtype) for U in self.bases])

    @classmethod
    def from_dense(cls, A, ranks) -> "TuckerFactor":
        """Truncated HOSVD of ``A`` with the given multilinear rank."""
        A = np.asarray(A)
        bases = [svd(matricize(A, i))[0][:, :r] for i, r in enumerate(ranks)]
        core = multi_mode_product(A, [adj(U) for U in bases])
        return cls(core, bases)


@dataclass
class TensorProblem:
    """Right-hand side ``F(t, Y)`` of a tensor ODE on ``dims``.

    Optional hooks replace the dense synthesis:

    * ``rhs_K(t, i, K, W, bases)`` returns the mode-``i`` K-step derivative;
    * ``rhs_core(t, C, bases)`` returns ``F(t, C x_j U_j) x_j U_j^H``.
    """

    dims: tuple
    rhs: Callable[[float, np.ndarray], np.ndarray]
    dtype: type = np.float64
    rhs_K: Callable | None = None
    rhs_core: Callable | None = None
    name: str = ""

    @property
    def is_complex(self) -> bool:
        return np.issubdtype(np.dtype(self.dtype), np.complexfloating)

    def k_rhs(self, t, i, K, W, bases):
        if self.rhs_K is not None:
            return self.rhs_K(t, i, K, W, bases)
        dims = list(b.shape[1] for b in bases)
        dims[i] = K.shape[0]
        D = tensorize(i, K @ adj(W), dims)
        Y = multi_mode_product(D, bases, skip=i)
        G = multi_mode_product(self.rhs(t, Y), [adj(U) for U in bases], skip=i)
        return matricize(G, i) @ W

    def core_rhs(self, t, C, bases):
        if self.rhs_core is not None:
            return self.rhs_core(t, C, bases)
        return multi_mode_product(self.rhs(t, multi_mode_product(C, bases)), [adj(U) for U in bases])


@dataclass
class TuckerStepReport:
    t_start: float
    t_end: float
    ranks_before: tuple
    ranks_augmented: tuple
    ranks_after: tuple
    discarded_mass: list
    theta: float
    projection_residual: float | None = None
    augmented: TuckerFactor | None = None
    diagnostics: dict = field(default_factory=dict)

    @property
    def total_discarded(self) -> float:
        return float(sum(self.discarded_mass))


def tucker_difference_norm(A: TuckerFactor, B: TuckerFactor) -> float:
    """Frobenius norm of ``A - B`` from the factors alone."""
    ra, rb = A.ranks, B.ranks
    core = np.zeros(tuple(p + q for p, q in zip(ra, rb)), dtype=np.result_type(A.core, B.core))
    core[tuple(slice(0, p) for p in ra)] = A.core
    core[tuple(slice(p, None) for p in ra)] = -B.core
    triangles = [qr(np.concatenate([Ua, Ub], axis=1))[1] for Ua, Ub in zip(A.bases, B.bases)]
    return frobenius_norm(multi_mode_product(core, triangles))


def _mode_kstep(Y0: TuckerFactor, problem, i, t0, h, method):
    C0, bases = Y0.core, Y0.bases
    W, R = qr(adj(matricize(C0, i)))
    S_i = adj(R)
    K0 = bases[i] @ S_i
    K1 = rk_integrate(
        lambda t, K: problem.k_rhs(t, i, K, W, bases), K0, t0, h, method, f"K-step mode {i}"
    )
    U_hat = augmented_basis(K1, bases[i])
    return U_hat, adj(U_hat) @ bases[i]


def truncate_tucker(C_hat, U_hats, policy: TruncationPolicy, order: Sequence[int] | None = None):
    """Sequential mode-wise truncation with per-mode tolerance ``theta / d``.

    Returns ``(factor, discarded, theta)`` where ``discarded[i]`` is the
    Frobenius mass dropped in mode ``i``.  In relative mode ``theta`` is taken
    from the spectral norm of the first processed matricization.
    """
    d = C_hat.ndim
    order = list(range(d)) if order is None else list(order)
    if sorted(order) != list(range(d)):
        raise ValueError("truncation order must be a permutation of the modes")
    C = C_hat
    bases = list(U_hats)
    discarded = [0.0] * d
    theta = None
    for i in order:
        P, sigma, Q = svd(matricize(C, i))
        if theta is None:
            theta = policy.threshold(sigma)
        r = tail_rank(sigma, theta / d)
        n_i = U_hats[i].shape[0]
        r = max(policy.r_min, min(r, policy.rank_cap((n_i, n_i))))
        r = min(r, sigma.size)
        discarded[i] = float(np.sqrt(np.sum(sigma[r:] ** 2)))
        dims = list(C.shape)
        dims[i] = r
        C = tensorize(i, sigma[:r, None] * adj(Q[:, :r]), dims)
        bases[i] = bases[i] @ P[:, :r]
    return TuckerFactor(C, bases), discarded, float(theta)


def adaptive_tucker_step(
    Y0: TuckerFactor,
    problem: TensorProblem,
    t0: float,
    h: float,
    method: SubstepMethod,
    policy: TruncationPolicy,
    *,
    kstep_order: Sequence[int] | None = None,
    truncation_order: Sequence[int] | None = None,
    debug: bool = False,
    parallel: bool = False,
):
    """One rank-adaptive Tucker step; returns ``(Y1, TuckerStepReport)``.

    ``kstep_order`` only changes the order in which the independent mode
    K-steps are evaluated.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    if problem.is_complex and not np.iscomplexobj(Y0.core):
        Y0 = Y0.astype(problem.dtype)
    d = Y0.order
    modes = list(range(d)) if kstep_order is None else list(kstep_order)

    if parallel:
        with ThreadPoolExecutor(max_workers=d) as pool:
            futures = {i: pool.submit(_mode_kstep, Y0, problem, i, t0, h, method) for i in modes}
            results = {i: f.result() for i, f in futures.items()}
    else:
        results = {i: _mode_kstep(Y0, problem, i, t0, h, method) for i in modes}
    U_hats = [results[i][0] for i in range(d)]
    M_hats = [results[i][1] for i in range(d)]

    C_start = multi_mode_product(Y0.core, M_hats)
    residual = tucker_difference_norm(TuckerFactor(C_start, U_hats), Y0)
    scale = frobenius_norm(Y0.core)
    if debug and residual > 1e-12 * scale:
        raise AssertionError(f"projected initial core deviates from Y0 by {residual:.3e}")

    C_end = rk_integrate(
        lambda t, C: problem.core_rhs(t, C, U_hats), C_start, t0, h, method, "core step"
    )
    Y1, discarded, theta = truncate_tucker(C_end, U_hats, policy, truncation_order)
    report = TuckerStepReport(
        t_start=t0,
        t_end=t0 + h,
        ranks_before=Y0.ranks,
        ranks_augmented=tuple(U.shape[1] for U in U_hats),
        ranks_after=Y1.ranks,
        discarded_mass=discarded,
        theta=theta,
        projection_residual=residual,
        augmented=TuckerFactor(C_end, U_hats),
        diagnostics={"projection_ratio": residual / scale if scale > 0 else residual},
    )
    return Y1, report


def integrate_tucker(Y0, problem, t0, h, steps, method, policy, *, callback=None, debug=False, parallel=False):
    Y = Y0
    reports = []
    for k in range(steps):
        try:
            Y, rep = adaptive_tucker_step(
                Y, problem, t0 + k * h, h, method, policy, debug=debug, parallel=parallel
            )
        except SubstepDiverged as exc:
            raise SubstepDiverged(exc.substep, step=k) from exc
        reports.append(rep)
        if callback is not None:
            callback(k, Y, rep)
    return Y, reports
