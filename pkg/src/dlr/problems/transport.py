"""1-D radiation transport with isotropic scattering, P_N moments in angle and
Lax-Friedrichs finite volumes in space.

The state ``Y`` is ``Nx x (N+1)``: rows are cells, columns are coefficients
of the angular flux in the Legendre polynomials normalized on ``[-1, 1]``
(``P~_k = sqrt((2k+1)/2) P_k``).  The semi-discrete right-hand side is

    F(Y) = -D1 Y A^T + D2 Y M^T + Y G^T

with the central difference ``D1`` and zero-inflow ghost cells.  Two
numerical viscosities are available:

* ``"scalar"``: ``M = I`` and ``D2 = (1/(2 dt)) (1, -2, 1)``, the
  Lax-Friedrichs flux with the global constant ``dx/dt``;
* ``"matrix"``: ``M = |A|`` and ``D2 = (1/(2 dx)) (1, -2, 1)``, the same
  flux with the viscosity taken per characteristic field.

A rank-one isotropic state is invariant under the low-rank dynamics with the
scalar viscosity (the tangent part of ``F`` vanishes), so the experiments use
the matrix form.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.special import erf

from ..linalg import adj
from ..matrix_dlr import LowRankFactor, MatrixProblem


def legendre_flux_matrix(n_moments: int) -> np.ndarray:
    """``A_kl = int mu P~_k P~_l dmu``: symmetric tridiagonal, off-diagonal ``(k+1)/sqrt((2k+1)(2k+3))``."""
    k = np.arange(n_moments - 1)
    gamma = (k + 1) / np.sqrt((2 * k + 1) * (2 * k + 3))
    return np.diag(gamma, 1) + np.diag(gamma, -1)


def scattering_matrix(n_moments: int, sigma_s: float) -> np.ndarray:
    g = np.full(n_moments, -sigma_s)
    g[0] = 0.0
    return np.diag(g)


@dataclass
class TransportProblem:
    nx: int = 200
    n_moments: int = 64
    a: float = -5.0
    b: float = 5.0
    sigma_s: float = 1.0
    width: float = 3e-2
    cfl: float = 0.99
    T: float = 5.0
    periodic: bool = False
    viscosity: str = "matrix"
    A_flux: np.ndarray = field(init=False, repr=False)
    G_scatter: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.dx = (self.b - self.a) / self.nx
        self.x = self.a + (np.arange(self.nx) + 0.5) * self.dx
        self.steps = int(np.ceil(self.T / (self.cfl * self.dx) - 1e-12))
        self.dt = self.T / self.steps
        self.A_flux = legendre_flux_matrix(self.n_moments)
        self.G_scatter = scattering_matrix(self.n_moments, self.sigma_s)
        if self.viscosity == "scalar":
            self.M_visc = np.eye(self.n_moments)
            visc_scale = 1.0 / (2 * self.dt)
        elif self.viscosity == "matrix":
            w, Q = np.linalg.eigh(self.A_flux)
            self.M_visc = (Q * np.abs(w)) @ Q.T
            visc_scale = 1.0 / (2 * self.dx)
        else:
            raise ValueError(f"unknown viscosity {self.viscosity!r}")
        n = self.nx
        if self.periodic:
            shift_up = sp.eye(n, k=1, format="lil") + sp.eye(n, k=-(n - 1), format="lil")
        else:
            shift_up = sp.eye(n, k=1, format="lil")
        shift_up = sp.csr_matrix(shift_up)
        shift_down = shift_up.T.tocsr()
        self.D1 = ((shift_up - shift_down) / (2 * self.dx)).tocsr()
        self.D2 = ((shift_up + shift_down - 2 * sp.eye(n)) * visc_scale).tocsr()

    def rhs(self, t, Y):
        return -(self.D1 @ Y) @ self.A_flux.T + (self.D2 @ Y) @ self.M_visc.T + Y @ self.G_scatter.T

    def initial_density(self) -> np.ndarray:
        """Cell averages of the Gaussian ``exp(-x^2 / (2 w^2)) / (sqrt(2 pi) w)``."""
        s = np.sqrt(2.0) * self.width
        lo = self.x - 0.5 * self.dx
        hi = self.x + 0.5 * self.dx
        return 0.5 * (erf(hi / s) - erf(lo / s)) / self.dx

    def initial_state(self) -> np.ndarray:
        Y = np.zeros((self.nx, self.n_moments))
        # isotropic angular flux: only the P~_0 coefficient, sqrt(2) * density
        Y[:, 0] = np.sqrt(2.0) * self.initial_density()
        return Y

    def initial_factor(self) -> LowRankFactor:
        g = np.sqrt(2.0) * self.initial_density()
        nrm = np.linalg.norm(g)
        e0 = np.zeros((self.n_moments, 1))
        e0[0, 0] = 1.0
        return LowRankFactor((g / nrm)[:, None], np.array([[nrm]]), e0)

    @staticmethod
    def scalar_flux(Y) -> np.ndarray:
        """``Phi = int f dmu = sqrt(2) * coefficient of P~_0``."""
        return np.sqrt(2.0) * np.asarray(Y)[:, 0]

    def scalar_flux_factored(self, Y: LowRankFactor) -> np.ndarray:
        return np.sqrt(2.0) * (Y.U @ (Y.S @ adj(Y.V)[:, 0]))

    def problem(self) -> MatrixProblem:
        A, G, M, D1, D2 = self.A_flux, self.G_scatter, self.M_visc, self.D1, self.D2
        return MatrixProblem(
            shape=(self.nx, self.n_moments),
            rhs=self.rhs,
            rhs_K=lambda t, K, V: -(D1 @ K) @ (V.T @ A.T @ V) + (D2 @ K) @ (V.T @ M.T @ V)
            + K @ (V.T @ G.T @ V),
            rhs_L=lambda t, L, U: -(A @ L) @ ((D1 @ U).T @ U) + (M @ L) @ ((D2 @ U).T @ U) + G @ L,
            rhs_S=lambda t, S, U, V: -(U.T @ (D1 @ U)) @ S @ (V.T @ A.T @ V)
            + (U.T @ (D2 @ U)) @ S @ (V.T @ M.T @ V) + S @ (V.T @ G.T @ V),
            name="transport",
        )

    def oracle(self, T: float | None = None, Y0=None):
        """Full-rank explicit Euler on the same grid and step; returns the state at ``T``."""
        T = self.T if T is None else T
        steps = int(round(T / self.dt))
        if abs(steps * self.dt - T) > 1e-9 * max(1.0, T):
            raise ValueError("T must be a multiple of the grid time step")
        Y = self.initial_state() if Y0 is None else np.array(Y0, dtype=float)
        for _ in range(steps):
            Y = Y + self.dt * self.rhs(0.0, Y)
        return Y
