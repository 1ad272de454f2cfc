"""Fixed-rank and rank-adaptive low-rank integrators for matrix ODEs ``Y' = F(t, Y)``.

One adaptive step from ``Y0 = U0 S0 V0^H`` of rank ``r``:

1. K-step ``K' = F(t, K V0^H) V0`` from ``U0 S0`` and L-step
   ``L' = F(t, U0 L^H)^H U0`` from ``V0 S0^H``, followed by the augmented bases
   ``U_hat = orth([K(t1) | U0])`` and ``V_hat = orth([L(t1) | V0])``.
2. Galerkin S-step ``S' = U_hat^H F(t, U_hat S V_hat^H) V_hat`` on the
   ``2r x 2r`` coefficient matrix, started from the exact projection of ``Y0``.
3. SVD truncation of ``S_hat(t1)`` to the smallest rank whose discarded tail
   has Frobenius mass at most ``theta``.

The fixed-rank variant orthonormalizes ``K(t1)`` and ``L(t1)`` alone and keeps
the rank.
"""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .linalg import adj, augmented_basis, frobenius_norm, lowrank_difference_norm, qr_orth, svd
from .rk import SubstepDiverged, SubstepMethod, rk_integrate

logger = logging.getLogger(__name__)

PROJECTION_RTOL = 1e-12


@dataclass
class LowRankFactor:
    """``Y = U @ S @ adj(V)`` with orthonormal ``U`` (m x r) and ``V`` (n x r)."""

    U: np.ndarray
    S: np.ndarray
    V: np.ndarray

    @property
    def rank(self) -> int:
        return self.S.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        return self.U.shape[0], self.V.shape[0]

    def reconstruct(self) -> np.ndarray:
        return self.U @ self.S @ adj(self.V)

    def norm(self) -> float:
        # orthonormal U, V leave the Frobenius norm of S unchanged
        return frobenius_norm(self.S)

    def astype(self, dtype) -> "LowRankFactor":
        return LowRankFactor(self.U.astype(dtype), self.S.astype(dtype), self.V.astype(dtype))

    @classmethod
    def from_dense(cls, A, rank: int) -> "LowRankFactor":
        """Best rank-``rank`` approximation of ``A`` by truncated SVD."""
        P, sigma, Q = svd(A)
        r = min(rank, sigma.size)
        return cls(P[:, :r].copy(), np.diag(sigma[:r]).astype(P.dtype), Q[:, :r].copy())


def reconstruct(Y: LowRankFactor) -> np.ndarray:
    return Y.reconstruct()


@dataclass
class MatrixProblem:
    """Right-hand side ``F(t, Y)`` of an ``m x n`` matrix ODE.

    The projected hooks are optional shortcuts.  When absent they are
    synthesized from ``rhs``:

    * ``rhs_K(t, K, V0) = F(t, K V0^H) V0``
    * ``rhs_L(t, L, U0) = F(t, U0 L^H)^H U0``
    * ``rhs_S(t, S, U, V) = U^H F(t, U S V^H) V``

    ``rhs`` and every hook must be safe to call concurrently.
    """

    shape: tuple[int, int]
    rhs: Callable[[float, np.ndarray], np.ndarray]
    dtype: type = np.float64
    rhs_K: Callable | None = None
    rhs_L: Callable | None = None
    rhs_S: Callable | None = None
    energy: Callable | None = None
    name: str = ""

    @property
    def is_complex(self) -> bool:
        return np.issubdtype(np.dtype(self.dtype), np.complexfloating)

    def k_rhs(self, t, K, V0):
        if self.rhs_K is not None:
            return self.rhs_K(t, K, V0)
        return self.rhs(t, K @ adj(V0)) @ V0

    def l_rhs(self, t, L, U0):
        if self.rhs_L is not None:
            return self.rhs_L(t, L, U0)
        return adj(self.rhs(t, U0 @ adj(L))) @ U0

    def s_rhs(self, t, S, U, V):
        if self.rhs_S is not None:
            return self.rhs_S(t, S, U, V)
        return adj(U) @ self.rhs(t, U @ S @ adj(V)) @ V


@dataclass(frozen=True)
class TruncationPolicy:
    """Tolerance rule for the post-Galerkin truncation.

    ``mode="absolute"`` uses ``theta = tau``; ``mode="relative"`` uses
    ``theta = tau * sigma_1``, the spectral norm of the matrix being truncated.
    The accepted rank is clamped to ``[r_min, r_max]``; ``r_max=None`` means
    half the smaller problem dimension.
    """

    tau: float = 0.0
    mode: str = "absolute"
    r_min: int = 1
    r_max: int | None = None

    def __post_init__(self):
        if self.mode not in ("absolute", "relative"):
            raise ValueError(f"unknown truncation mode {self.mode!r}")
        if not self.tau >= 0:
            raise ValueError("tau must be nonnegative")
        if self.r_min < 1:
            raise ValueError("r_min must be >= 1")
        if self.r_max is not None and self.r_max < self.r_min:
            raise ValueError("r_max must be >= r_min")

    def threshold(self, sigma) -> float:
        if self.mode == "absolute":
            return float(self.tau)
        return float(self.tau * (sigma[0] if len(sigma) else 0.0))

    def rank_cap(self, shape) -> int:
        if self.r_max is not None:
            return self.r_max
        return max(1, min(shape) // 2)


@dataclass
class StepReport:
    t_start: float
    t_end: float
    rank_before: int
    rank_augmented: int
    rank_after: int
    discarded_mass: float
    theta: float
    sigma: np.ndarray
    sigma_hat: np.ndarray | None = None
    projection_residual: float | None = None
    augmented: LowRankFactor | None = None
    diagnostics: dict = field(default_factory=dict)


def tail_rank(sigma, theta: float) -> int:
    """Minimal ``r`` with ``sqrt(sum_{j >= r} sigma_j^2) <= theta``.

    ``theta = 0`` means the numerical rank: values below
    ``len(sigma) * eps * sigma_1`` count as zero.
    """
    sigma = np.asarray(sigma, dtype=float)
    if theta == 0 and sigma.size:
        theta = sigma.size * np.finfo(float).eps * sigma[0]
    tails = np.sqrt(np.concatenate([np.cumsum((sigma**2)[::-1])[::-1], [0.0]]))
    return int(np.argmax(tails <= theta))


def truncate(S_hat, U_hat, V_hat, policy: TruncationPolicy, shape=None):
    """Truncate ``U_hat S_hat V_hat^H`` to tolerance.

    Returns ``(factor, discarded_mass)``; ``factor.S`` is diagonal with
    descending entries and ``discarded_mass`` is the Frobenius norm of the
    dropped singular values.
    """
    factor, discarded, _, _ = _truncate_svd(svd(S_hat), U_hat, V_hat, policy, shape)
    return factor, discarded


def _truncate_svd(decomp, U_hat, V_hat, policy, shape=None):
    P, sigma, Q = decomp
    theta = policy.threshold(sigma)
    shape = shape or (U_hat.shape[0], V_hat.shape[0])
    r = max(policy.r_min, min(tail_rank(sigma, theta), policy.rank_cap(shape)))
    r = min(r, sigma.size)
    discarded = float(np.sqrt(np.sum(sigma[r:] ** 2)))
    S1 = np.diag(sigma[:r]).astype(P.dtype)
    factor = LowRankFactor(U_hat @ P[:, :r], S1, V_hat @ Q[:, :r])
    return factor, discarded, theta, sigma


def _kl_steps(Y0: LowRankFactor, problem: MatrixProblem, t0, h, method, parallel):
    U0, S0, V0 = Y0.U, Y0.S, Y0.V

    def kstep():
        return rk_integrate(lambda t, K: problem.k_rhs(t, K, V0), U0 @ S0, t0, h, method, "K-step")

    def lstep():
        return rk_integrate(lambda t, L: problem.l_rhs(t, L, U0), V0 @ adj(S0), t0, h, method, "L-step")

    if parallel:
        with ThreadPoolExecutor(max_workers=2) as pool:
            fk, fl = pool.submit(kstep), pool.submit(lstep)
            return fk.result(), fl.result()
    return kstep(), lstep()


def _ratio(residual: float, scale: float) -> float:
    return residual / scale if scale > 0 else residual


def _prepare(Y0: LowRankFactor, problem: MatrixProblem, h):
    if not h > 0:
        raise ValueError("h must be positive")
    if problem.is_complex and not np.iscomplexobj(Y0.S):
        Y0 = Y0.astype(problem.dtype)
    return Y0


def adaptive_matrix_step(
    Y0: LowRankFactor,
    problem: MatrixProblem,
    t0: float,
    h: float,
    method: SubstepMethod,
    policy: TruncationPolicy,
    *,
    debug: bool = False,
    parallel: bool = False,
):
    """One rank-adaptive step from ``t0`` to ``t0 + h``.

    Returns ``(Y1, report)``.  ``report.augmented`` holds the untruncated
    Galerkin solution ``U_hat S_hat(t1) V_hat^H``.  With ``debug=True`` the
    projected starting value is checked against ``Y0`` and an
    ``AssertionError`` is raised if they differ by more than
    ``1e-12 * ||S0||_F``.
    """
    Y0 = _prepare(Y0, problem, h)
    U0, S0, V0 = Y0.U, Y0.S, Y0.V

    K1, L1 = _kl_steps(Y0, problem, t0, h, method, parallel)
    U_hat = augmented_basis(K1, U0)
    V_hat = augmented_basis(L1, V0)
    M_hat = adj(U_hat) @ U0
    N_hat = adj(V_hat) @ V0
    S_start = M_hat @ S0 @ adj(N_hat)

    residual = lowrank_difference_norm(U_hat, S_start, V_hat, U0, S0, V0)
    if debug and residual > PROJECTION_RTOL * frobenius_norm(S0):
        raise AssertionError(
            f"projected initial value deviates from Y0 by {residual:.3e} "
            f"(bound {PROJECTION_RTOL * frobenius_norm(S0):.3e})"
        )

    S_end = rk_integrate(
        lambda t, S: problem.s_rhs(t, S, U_hat, V_hat), S_start, t0, h, method, "S-step"
    )

    Y1, discarded, theta, sigma_hat = _truncate_svd(
        svd(S_end), U_hat, V_hat, policy, shape=problem.shape
    )
    report = StepReport(
        t_start=t0,
        t_end=t0 + h,
        rank_before=Y0.rank,
        rank_augmented=U_hat.shape[1],
        rank_after=Y1.rank,
        discarded_mass=discarded,
        theta=theta,
        sigma=np.diag(Y1.S).real.copy(),
        sigma_hat=sigma_hat,
        projection_residual=residual,
        augmented=LowRankFactor(U_hat, S_end, V_hat),
        diagnostics={"projection_ratio": _ratio(residual, frobenius_norm(S0))},
    )
    if discarded > theta:
        logger.debug("rank clamp kept discarded mass %.3e above theta %.3e", discarded, theta)
    return Y1, report


def fixed_rank_matrix_step(
    Y0: LowRankFactor,
    problem: MatrixProblem,
    t0: float,
    h: float,
    method: SubstepMethod,
    *,
    parallel: bool = False,
):
    """One step of the fixed-rank integrator: bases from ``K(t1)``, ``L(t1)`` only."""
    Y0 = _prepare(Y0, problem, h)
    U0, S0, V0 = Y0.U, Y0.S, Y0.V
    r = Y0.rank
    if r > min(problem.shape):
        raise ValueError("rank exceeds matrix dimensions")

    K1, L1 = _kl_steps(Y0, problem, t0, h, method, parallel)
    U1 = qr_orth(K1)
    V1 = qr_orth(L1)
    S_start = (adj(U1) @ U0) @ S0 @ adj(adj(V1) @ V0)
    S1 = rk_integrate(lambda t, S: problem.s_rhs(t, S, U1, V1), S_start, t0, h, method, "S-step")
    Y1 = LowRankFactor(U1, S1, V1)
    report = StepReport(
        t_start=t0,
        t_end=t0 + h,
        rank_before=r,
        rank_augmented=r,
        rank_after=r,
        discarded_mass=0.0,
        theta=0.0,
        sigma=np.linalg.svd(S1, compute_uv=False),
    )
    return Y1, report


def integrate(
    Y0: LowRankFactor,
    problem: MatrixProblem,
    t0: float,
    h: float,
    steps: int,
    method: SubstepMethod,
    policy: TruncationPolicy | None = None,
    *,
    callback=None,
    debug: bool = False,
    parallel: bool = False,
):
    """Take ``steps`` constant steps; ``policy=None`` selects the fixed-rank integrator.

    ``callback(step_index, Y, report)`` is invoked after each step.  Returns
    the final factor and the list of reports.
    """
    Y = Y0
    reports = []
    for k in range(steps):
        t = t0 + k * h
        try:
            if policy is None:
                Y, rep = fixed_rank_matrix_step(Y, problem, t, h, method, parallel=parallel)
            else:
                Y, rep = adaptive_matrix_step(
                    Y, problem, t, h, method, policy, debug=debug, parallel=parallel
                )
        except SubstepDiverged as exc:
            raise SubstepDiverged(exc.substep, step=k) from exc
        reports.append(rep)
        if callback is not None:
            callback(k, Y, rep)
    return Y, reports
