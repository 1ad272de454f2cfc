"""Burgers' equation with an uncertain ramp initial condition, stochastic
Galerkin in a tensorized Legendre basis and Lax-Friedrichs finite volumes.

Random input ``xi = (xi1, xi2)`` is uniform on ``[-1, 1] x [0, 1]``.  The state
``Y`` is ``Nx x K``: row ``j`` holds the modal coefficients of ``u(x_j, .)`` in
the basis ``phi_k(xi) = p_a(xi1) q_b(xi2)`` with ``k = a (p2 + 1) + b``, both
factors Legendre polynomials orthonormal for the uniform probability measure.

The modal flux ``F_k(u) = 1/2 sum_lm C_klm u_l u_m`` is evaluated through the
quadrature factorization of ``C``: values at the Gauss nodes are squared and
projected back, which equals the triple-product contraction exactly because
the rule integrates degree ``3 p`` polynomials exactly.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.polynomial import legendre

from ..linalg import svd
from ..matrix_dlr import LowRankFactor, MatrixProblem

CACHE_MAGIC = b"DLRC"


def gauss_uniform(n: int, lo: float, hi: float):
    """Gauss-Legendre nodes and weights for the uniform probability measure on ``[lo, hi]``."""
    x, w = legendre.leggauss(n)
    return lo + (hi - lo) * (x + 1) / 2, w / 2


def legendre_values(degree: int, s) -> np.ndarray:
    """``sqrt(2k+1) P_k(s)`` for ``k = 0..degree`` at points ``s`` in ``[-1, 1]``; shape ``(len(s), degree+1)``."""
    s = np.asarray(s, dtype=float)
    V = legendre.legvander(s, degree)
    return V * np.sqrt(2 * np.arange(degree + 1) + 1)


@dataclass
class TensorLegendreBasis:
    """Orthonormal tensorized Legendre basis on ``[-1, 1] x [0, 1]`` with degree caps ``(p1, p2)``."""

    p1: int = 9
    p2: int = 9

    @property
    def size(self) -> int:
        return (self.p1 + 1) * (self.p2 + 1)

    def evaluate(self, xi1, xi2) -> np.ndarray:
        """Basis values at the points ``(xi1[q], xi2[q])``; shape ``(Q, K)``."""
        A = legendre_values(self.p1, xi1)
        B = legendre_values(self.p2, 2 * np.asarray(xi2, dtype=float) - 1)
        return (A[:, :, None] * B[:, None, :]).reshape(len(A), -1)

    def quadrature(self, n1: int, n2: int | None = None):
        """Tensor Gauss rule: ``(xi1, xi2, weights)`` flattened, weights summing to 1."""
        n2 = n1 if n2 is None else n2
        x1, w1 = gauss_uniform(n1, -1.0, 1.0)
        x2, w2 = gauss_uniform(n2, 0.0, 1.0)
        X1, X2 = np.meshgrid(x1, x2, indexing="ij")
        return X1.ravel(), X2.ravel(), np.outer(w1, w2).ravel()

    def exact_quadrature(self):
        """Smallest tensor rule integrating triple products exactly."""
        return self.quadrature(3 * self.p1 // 2 + 1, 3 * self.p2 // 2 + 1)

    def triple_tensor(self) -> np.ndarray:
        """``C_klm = E[phi_k phi_l phi_m]``; ``K^3`` entries, meant for small bases."""
        x1, x2, w = self.exact_quadrature()
        Phi = self.evaluate(x1, x2)
        return np.einsum("q,qk,ql,qm->klm", w, Phi, Phi, Phi)


def save_triple_tensor(path, C: np.ndarray, p1: int, p2: int) -> None:
    """Binary cache: ``DLRC``, two little-endian uint32 degree caps, float64 LE payload."""
    K = (p1 + 1) * (p2 + 1)
    if C.shape != (K, K, K):
        raise ValueError("tensor shape does not match the degree caps")
    with open(path, "wb") as fh:
        fh.write(CACHE_MAGIC)
        fh.write(struct.pack("<II", p1, p2))
        fh.write(np.ascontiguousarray(C, dtype="<f8").tobytes())


def load_triple_tensor(path):
    """Inverse of :func:`save_triple_tensor`; returns ``(C, p1, p2)``."""
    data = Path(path).read_bytes()
    if data[:4] != CACHE_MAGIC:
        raise ValueError("not a triple-tensor cache (bad magic)")
    p1, p2 = struct.unpack("<II", data[4:12])
    K = (p1 + 1) * (p2 + 1)
    payload = data[12:]
    if len(payload) != 8 * K**3:
        raise ValueError("triple-tensor cache is truncated")
    C = np.frombuffer(payload, dtype="<f8").reshape(K, K, K).astype(np.float64)
    return C, p1, p2


def ramp(x, xi1, xi2, x0=0.3, x1=0.4, uL=12.0, uR=1.0, sigma1=0.2, sigma2=5.0):
    """Initial condition ``u_IC(x, xi)``; broadcasts over its arguments."""
    a = x0 + sigma1 * xi1
    b = x1 + sigma1 * xi1
    ur = uR + sigma2 * xi2
    mid = uL + (ur - uL) / (x0 - x1) * (a - x)
    return np.where(x < a, uL, np.where(x <= b, mid, ur))


def characteristic_solution(t, x, xi1, xi2, x0=0.3, x1=0.4, uL=12.0, uR=1.0, sigma1=0.2, sigma2=5.0):
    """Entropy solution of Burgers' equation for the ramp data, sample by sample.

    Before ``t_s = (x1 - x0) / (uL - uR(xi2))`` the ramp steepens linearly;
    afterwards a shock born at ``a + uL t_s`` moves with speed ``(uL + uR) / 2``.
    """
    a = x0 + sigma1 * xi1
    b = x1 + sigma1 * xi1
    ur = uR + sigma2 * xi2
    ts = (x1 - x0) / (uL - ur)
    left = a + uL * t
    right = b + ur * t
    width = np.where(t < ts, right - left, 1.0)
    mid = uL + (ur - uL) * (x - left) / width
    pre = np.where(x < left, uL, np.where(x <= right, mid, ur))
    xs = a + uL * ts + 0.5 * (uL + ur) * (t - ts)
    post = np.where(x < xs, uL, ur)
    return np.where(t < ts, pre, post)


@dataclass
class BurgersUQProblem:
    nx: int = 200
    p1: int = 9
    p2: int = 9
    a: float = 0.0
    b: float = 1.0
    T: float = 0.04
    cfl: float = 0.99
    x0: float = 0.3
    x1: float = 0.4
    uL: float = 12.0
    uR: float = 1.0
    sigma1: float = 0.2
    sigma2: float = 5.0
    ic_quadrature: int = 64
    basis: TensorLegendreBasis = field(init=False, repr=False)

    def __post_init__(self):
        self.basis = TensorLegendreBasis(self.p1, self.p2)
        self.dx = (self.b - self.a) / self.nx
        self.x = self.a + (np.arange(self.nx) + 0.5) * self.dx
        self.u_max = self.uL + self.sigma2
        self.steps = int(np.ceil(self.T * self.u_max / (self.cfl * self.dx) - 1e-12))
        self.dt = self.T / self.steps
        x1, x2, w = self.basis.exact_quadrature()
        self._Phi = self.basis.evaluate(x1, x2)
        self._w = w

    @property
    def params(self) -> dict:
        return dict(x0=self.x0, x1=self.x1, uL=self.uL, uR=self.uR, sigma1=self.sigma1, sigma2=self.sigma2)

    def modal_flux(self, Y) -> np.ndarray:
        """``F_k(u_j) = 1/2 sum_lm C_klm u_jl u_jm`` for every row."""
        Uq = Y @ self._Phi.T
        return 0.5 * (Uq**2 * self._w) @ self._Phi

    def rhs(self, t, Y):
        # outflow: ghost cells copy the boundary cells
        Yg = np.concatenate([Y[:1], Y, Y[-1:]], axis=0)
        Fg = self.modal_flux(Yg)
        c = self.dx / (2 * self.dt)
        flux = 0.5 * (Fg[:-1] + Fg[1:]) - c * (Yg[1:] - Yg[:-1])
        return -(flux[1:] - flux[:-1]) / self.dx

    def initial_state(self) -> np.ndarray:
        """Modal projection of the ramp initial condition at the cell centers."""
        x1, x2, w = self.basis.quadrature(self.ic_quadrature)
        vals = ramp(self.x[:, None], x1[None, :], x2[None, :], **self.params)
        return (vals * w) @ self.basis.evaluate(x1, x2)

    def initial_factor(self, rank: int) -> LowRankFactor:
        P, s, Q = svd(self.initial_state())
        return LowRankFactor(P[:, :rank], np.diag(s[:rank]), Q[:, :rank])

    @staticmethod
    def expectation(Y) -> np.ndarray:
        # phi_0 = 1
        return np.asarray(Y)[:, 0]

    @staticmethod
    def std(Y) -> np.ndarray:
        Y = np.asarray(Y)
        return np.sqrt(np.sum(Y[:, 1:] ** 2, axis=1))

    def problem(self) -> MatrixProblem:
        return MatrixProblem(shape=(self.nx, self.basis.size), rhs=self.rhs, name="burgers")

    def oracle(self, t: float, n_quad: int = 50):
        """Expectation and standard deviation of the characteristics solution at the cell centers."""
        x1, x2, w = self.basis.quadrature(n_quad)
        u = characteristic_solution(t, self.x[:, None], x1[None, :], x2[None, :], **self.params)
        mean = u @ w
        var = ((u - mean[:, None]) ** 2) @ w
        return mean, np.sqrt(var)

    def l1_error(self, E) -> float:
        mean, _ = self.oracle(self.T)
        return float(np.sum(np.abs(np.asarray(E) - mean)) * self.dx)
