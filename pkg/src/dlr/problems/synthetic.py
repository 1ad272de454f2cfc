"""Closed-form low-rank paths ``A(t)`` used with ``F(t, Y) = A'(t)``.

For such right-hand sides one integrator step started from ``A(t0)``
reproduces ``A(t1)`` exactly, up to the substep quadrature error.  The paths
are cubic in ``t`` so RK4, which reduces to Simpson's rule on a
time-only right-hand side, integrates them without error.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..linalg import adj, lowrank_difference_norm, multi_mode_product, qr_orth, svd
from ..matrix_dlr import LowRankFactor, MatrixProblem
from ..tucker_dlr import TensorProblem, TuckerFactor


@dataclass
class RankRPath:
    """``A(t) = L(t) R(t)^T`` with ``L`` linear and ``R`` quadratic in ``t``.

    The column scales of ``L0`` decay geometrically so the ``r`` singular
    values of ``A`` stay well separated.
    """

    m: int
    n: int
    r: int
    seed: int = 0
    L: list = field(init=False, repr=False)
    R: list = field(init=False, repr=False)

    def __post_init__(self):
        rng = np.random.default_rng(self.seed)
        scales = 2.0 ** -np.arange(self.r)
        self.L = [rng.standard_normal((self.m, self.r)) * scales,
                  0.5 * rng.standard_normal((self.m, self.r))]
        self.R = [rng.standard_normal((self.n, self.r)),
                  0.5 * rng.standard_normal((self.n, self.r)),
                  0.25 * rng.standard_normal((self.n, self.r))]

    def left(self, t):
        return self.L[0] + t * self.L[1]

    def right(self, t):
        return self.R[0] + t * self.R[1] + t**2 * self.R[2]

    def A(self, t) -> np.ndarray:
        return self.left(t) @ self.right(t).T

    def Adot(self, t) -> np.ndarray:
        dL = self.L[1]
        dR = self.R[1] + 2 * t * self.R[2]
        return dL @ self.right(t).T + self.left(t) @ dR.T

    def initial_factor(self, t0: float = 0.0) -> LowRankFactor:
        return LowRankFactor.from_dense(self.A(t0), self.r)

    def problem(self) -> MatrixProblem:
        return MatrixProblem(shape=(self.m, self.n), rhs=lambda t, Y: self.Adot(t), name="synthetic")

    def overlap_singular_values(self, t0: float, t1: float):
        """Smallest singular values of ``U(t1)^T U(t0)`` and ``V(t1)^T V(t0)``."""
        P0, _, Q0 = svd(self.A(t0))
        P1, _, Q1 = svd(self.A(t1))
        r = self.r
        su = np.linalg.svd(P1[:, :r].T @ P0[:, :r], compute_uv=False)
        sv = np.linalg.svd(Q1[:, :r].T @ Q0[:, :r], compute_uv=False)
        return float(su.min()), float(sv.min())

    def check_exactness_conditions(self, t0: float, t1: float, floor: float = 1e-8):
        su, sv = self.overlap_singular_values(t0, t1)
        if min(su, sv) <= floor:
            raise ValueError(f"basis overlap nearly singular ({su:.2e}, {sv:.2e})")
        sigma = np.linalg.svd(self.A(t1), compute_uv=False)
        if sigma[self.r - 1] <= floor or (sigma.size > self.r and sigma[self.r] > 1e-10 * sigma[0]):
            raise ValueError("A(t1) is not of rank r")


def synthetic_rank_r_path(m: int, n: int, r: int, seed: int = 0) -> RankRPath:
    return RankRPath(m, n, r, seed)


@dataclass
class TuckerPath:
    """``A(t) = C x_i (U_i0 + t U_i1)`` of fixed multilinear rank; cubic in ``t`` for ``d = 3``."""

    dims: tuple
    ranks: tuple
    seed: int = 0
    core: np.ndarray = field(init=False, repr=False)
    factors: list = field(init=False, repr=False)

    def __post_init__(self):
        rng = np.random.default_rng(self.seed)
        self.core = rng.standard_normal(self.ranks)
        self.factors = [
            (rng.standard_normal((n, r)), 0.5 * rng.standard_normal((n, r)))
            for n, r in zip(self.dims, self.ranks)
        ]

    def bases(self, t):
        return [U0 + t * U1 for U0, U1 in self.factors]

    def A(self, t) -> np.ndarray:
        return multi_mode_product(self.core, self.bases(t))

    def Adot(self, t) -> np.ndarray:
        B = self.bases(t)
        out = 0.0
        for i, (_, U1) in enumerate(self.factors):
            mats = list(B)
            mats[i] = U1
            out = out + multi_mode_product(self.core, mats)
        return out

    def initial_factor(self, t0: float = 0.0) -> TuckerFactor:
        return TuckerFactor.from_dense(self.A(t0), self.ranks)

    def problem(self) -> TensorProblem:
        return TensorProblem(dims=tuple(self.dims), rhs=lambda t, Y: self.Adot(t), name="synthetic-tucker")


def zero_tensor_problem(dims) -> TensorProblem:
    dims = tuple(dims)
    return TensorProblem(dims=dims, rhs=lambda t, Y: np.zeros_like(Y), name="zero")


def zero_matrix_problem(shape) -> MatrixProblem:
    return MatrixProblem(shape=tuple(shape), rhs=lambda t, Y: np.zeros_like(Y), name="zero")


def random_tucker(dims, ranks, seed: int = 0, decay: float = 0.5) -> TuckerFactor:
    """Random orthonormal bases and a core with geometrically decaying diagonal weight."""
    rng = np.random.default_rng(seed)
    bases = [qr_orth(rng.standard_normal((n, r))) for n, r in zip(dims, ranks)]
    core = rng.standard_normal(tuple(ranks))
    idx = np.arange(min(ranks))
    core[tuple(idx for _ in ranks)] += 4.0 * decay ** idx
    return TuckerFactor(core, bases)


@dataclass
class GradientFlow:
    """``f(Y) = ||Y - A||^2 / 2`` with gradient ``Y - A``; exact flow ``A + exp(-t)(Y0 - A)``."""

    target: np.ndarray
    _factors: tuple | None = field(default=None, init=False, repr=False)

    def value(self, Y) -> float:
        return 0.5 * float(np.linalg.norm(Y - self.target) ** 2)

    def value_factored(self, Y: LowRankFactor) -> float:
        P, s, Q = self._target_factors()
        return 0.5 * lowrank_difference_norm(Y.U, Y.S, Y.V, P, np.diag(s), Q) ** 2

    def _target_factors(self):
        if self._factors is None:
            P, s, Q = svd(self.target)
            keep = s > 1e-14 * s[0]
            self._factors = (P[:, keep], s[keep], Q[:, keep])
        return self._factors

    def gradient(self, Y):
        return Y - self.target

    def problem(self) -> MatrixProblem:
        T = self.target
        return MatrixProblem(
            shape=T.shape,
            rhs=lambda t, Y: T - Y,
            rhs_K=lambda t, K, V: T @ V - K,
            rhs_L=lambda t, L, U: adj(T) @ U - L,
            rhs_S=lambda t, S, U, V: adj(U) @ T @ V - S,
            name="gradient_flow",
        )


def gradient_flow_problem(n: int = 40, rank: int = 3, seed: int = 0) -> GradientFlow:
    rng = np.random.default_rng(seed)
    target = rng.standard_normal((n, rank)) @ rng.standard_normal((rank, n)) / np.sqrt(n)
    return GradientFlow(target)
