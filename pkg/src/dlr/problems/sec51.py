"""Linear matrix ODE ``Y' = -(B Y + Y B^T)`` with ``B = V_cos - D/2``.

``D = tridiag(-1, 2, -1)`` and ``V_cos = diag(1 - cos(2 pi j / n))`` for
``j = -n/2, ..., n/2 - 1``.  The initial value is ``U0 S0 V0^T`` with random
orthogonal ``U0``, ``V0`` and ``(S0)_ii = 10^-i``; its exact flow is
``exp(-tB) Y0 exp(-tB)^T``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..linalg import adj, qr_orth
from ..matrix_dlr import LowRankFactor, MatrixProblem


def second_difference(n: int) -> np.ndarray:
    return 2.0 * np.eye(n) - np.eye(n, k=1) - np.eye(n, k=-1)


def cosine_potential(n: int) -> np.ndarray:
    j = np.arange(-(n // 2), n - n // 2)
    return np.diag(1.0 - np.cos(2.0 * np.pi * j / n))


def operator_matrix(n: int) -> np.ndarray:
    """``B = V_cos - D/2`` (symmetric)."""
    return cosine_potential(n) - 0.5 * second_difference(n)


def random_orthogonal(n: int, rng: np.random.Generator) -> np.ndarray:
    return qr_orth(rng.standard_normal((n, n)))


class SylvesterOperator:
    """Linear map ``X -> sum_k A_k X B_k^T`` applied densely or to factors."""

    def __init__(self, terms):
        self.terms = [(np.asarray(A), np.asarray(B)) for A, B in terms]

    def __call__(self, X):
        return sum(A @ X @ B.T for A, B in self.terms)

    def project_left(self, K, V):
        """``H[K V^H] V`` without forming ``K V^H``."""
        return sum(A @ K @ (adj(V) @ B.T @ V) for A, B in self.terms)

    def project_right(self, L, U):
        """``H[U L^H]^H U``."""
        return sum(B.conj() @ L @ (adj(U) @ adj(A) @ U) for A, B in self.terms)

    def project(self, S, U, V):
        """``U^H H[U S V^H] V``."""
        return sum((adj(U) @ A @ U) @ S @ (adj(V) @ B.T @ V) for A, B in self.terms)

    def apply_factor(self, U, S, V):
        """Factored ``H[U S V^H]`` as stacked ``(U', S', V')``; ``V'`` is conjugated accordingly."""
        Us, Vs = [], []
        for A, B in self.terms:
            Us.append(A @ U)
            Vs.append(B.conj() @ V)
        k = len(self.terms)
        r1, r2 = S.shape
        big = np.zeros((k * r1, k * r2), dtype=S.dtype)
        for i in range(k):
            big[i * r1:(i + 1) * r1, i * r2:(i + 1) * r2] = S
        return np.concatenate(Us, axis=1), big, np.concatenate(Vs, axis=1)


@dataclass
class Sec51Problem:
    """Container for the linear test problem and its exact flow.

    ``S0`` holds the full diagonal of initial singular values; the initial
    factor of rank ``r`` keeps the leading ``r`` of them.
    """

    n: int = 100
    seed: int = 0
    normalize: bool = False
    B: np.ndarray = field(init=False, repr=False)
    U0: np.ndarray = field(init=False, repr=False)
    V0: np.ndarray = field(init=False, repr=False)
    sigma0: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        rng = np.random.default_rng(self.seed)
        self.B = operator_matrix(self.n)
        self.U0 = random_orthogonal(self.n, rng)
        self.V0 = random_orthogonal(self.n, rng)
        self.sigma0 = 10.0 ** -np.arange(1, self.n + 1, dtype=float)
        if self.normalize:
            self.sigma0 = self.sigma0 / np.linalg.norm(self.sigma0)
        w, Q = np.linalg.eigh(self.B)
        self._eig = (w, Q)
        self.hamiltonian = SylvesterOperator([(self.B, np.eye(self.n)), (np.eye(self.n), self.B)])

    @property
    def Y0(self) -> np.ndarray:
        return (self.U0 * self.sigma0) @ self.V0.T

    @property
    def Y0_symmetric(self) -> np.ndarray:
        return (self.U0 * self.sigma0) @ self.U0.T

    def initial_factor(self, r: int) -> LowRankFactor:
        return LowRankFactor(self.U0[:, :r].copy(), np.diag(self.sigma0[:r]), self.V0[:, :r].copy())

    def symmetric_initial_factor(self, r: int) -> LowRankFactor:
        U = self.U0[:, :r].copy()
        return LowRankFactor(U, np.diag(self.sigma0[:r]), U.copy())

    def propagator(self, t: float) -> np.ndarray:
        """``exp(-t B)`` via the eigendecomposition of symmetric ``B``."""
        w, Q = self._eig
        return (Q * np.exp(-t * w)) @ Q.T

    def reference(self, t: float, Y0=None) -> np.ndarray:
        """Exact flow ``exp(-tB) Y0 exp(-tB)^T`` (``Y0`` defaults to the full initial value)."""
        E = self.propagator(t)
        Y0 = self.Y0 if Y0 is None else Y0
        return E @ Y0 @ E.T

    def schroedinger_reference(self, t: float, Y0) -> np.ndarray:
        """Exact flow of ``Y' = -i H[Y]``: ``exp(-itB) Y0 exp(-itB)^T``."""
        w, Q = self._eig
        E = (Q * np.exp(-1j * t * w)) @ Q.T
        return E @ Y0 @ E.T

    def rhs(self, t, Y):
        return -(self.B @ Y + Y @ self.B.T)

    def problem(self) -> MatrixProblem:
        B = self.B
        return MatrixProblem(
            shape=(self.n, self.n),
            rhs=self.rhs,
            rhs_K=lambda t, K, V: -(B @ K + K @ (adj(V) @ B.T @ V)),
            rhs_L=lambda t, L, U: -(B @ L + L @ (adj(U) @ B.T @ U)),
            rhs_S=lambda t, S, U, V: -((adj(U) @ B @ U) @ S + S @ (adj(V) @ B.T @ V)),
            name="sec51",
        )

    def schroedinger_problem(self) -> MatrixProblem:
        """Complex ODE ``Y' = -i H[Y]`` with ``H[Y] = B Y + Y B^T``."""
        H = self.hamiltonian
        return MatrixProblem(
            shape=(self.n, self.n),
            rhs=lambda t, Y: -1j * H(Y),
            dtype=np.complex128,
            rhs_K=lambda t, K, V: -1j * H.project_left(K, V),
            rhs_L=lambda t, L, U: 1j * H.project_right(L, U),
            rhs_S=lambda t, S, U, V: -1j * H.project(S, U, V),
            name="schroedinger",
        )


def sec51_rhs(t, Y, B):
    return -(B @ Y + Y @ B.T)
