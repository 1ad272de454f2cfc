"""Monitors for the quantities the adaptive integrator conserves up to ``theta``,
and the complex rewriting of real Hamiltonian systems.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .linalg import adj, frobenius_norm, inner, lowrank_difference_norm, lowrank_norm
from .matrix_dlr import LowRankFactor, MatrixProblem


class ConfigError(ValueError):
    """A monitor or run was configured inconsistently."""


KINDS = ("norm", "schroedinger_energy", "gradient_functional", "symmetry_defect", "hamiltonian_energy")


@dataclass
class Monitor:
    """Named scalar evaluated after every step and logged as ``(t, value)``.

    ``kind`` is one of :data:`KINDS`.  ``fn`` maps a factored state to the
    value; ``requires_complex`` rejects real-field states.
    """

    name: str
    kind: str
    fn: Callable
    requires_complex: bool = False
    log: list = field(default_factory=list)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown monitor kind {self.kind!r}")

    @property
    def times(self) -> np.ndarray:
        return np.array([t for t, _ in self.log])

    @property
    def values(self) -> np.ndarray:
        return np.array([v for _, v in self.log])


def _core(Y):
    return Y.S if isinstance(Y, LowRankFactor) else Y.core


def monitor_step(mon: Monitor, t: float, Y) -> float:
    """Evaluate ``mon`` on ``Y`` at time ``t`` and append the value to its log."""
    if mon.requires_complex and not np.iscomplexobj(_core(Y)):
        raise ConfigError(f"monitor {mon.name!r} needs a complex-field state")
    if mon.log and not t > mon.log[-1][0]:
        raise ValueError(f"monitor {mon.name!r}: times must increase strictly")
    value = float(mon.fn(Y))
    if not np.isfinite(value):
        raise ValueError(f"monitor {mon.name!r} produced a non-finite value")
    mon.log.append((float(t), value))
    return value


def norm_monitor(name: str = "norm") -> Monitor:
    # orthonormal factors: ||Y||_F = ||S||_F (resp. ||C||_F)
    return Monitor(name, "norm", lambda Y: frobenius_norm(_core(Y)))


def symmetry_defect_monitor(name: str = "symmetry_defect") -> Monitor:
    def defect(Y: LowRankFactor):
        # Y^T = conj(V) S^T conj(U)^H
        return lowrank_difference_norm(Y.U, Y.S, Y.V, Y.V.conj(), Y.S.T, Y.U.conj())

    return Monitor(name, "symmetry_defect", defect)


def schroedinger_energy(H, Y: LowRankFactor) -> float:
    """``E(Y) = <Y, H[Y]>`` for a Sylvester-type ``H`` (see ``SylvesterOperator``)."""
    total = 0.0
    for A, B in H.terms:
        total += np.trace(adj(Y.S) @ (adj(Y.U) @ A @ Y.U) @ Y.S @ (adj(Y.V) @ B.T @ Y.V))
    return float(np.real(total))


def schroedinger_energy_monitor(H, name: str = "energy") -> Monitor:
    return Monitor(name, "schroedinger_energy", lambda Y: schroedinger_energy(H, Y), requires_complex=True)


def gradient_functional_monitor(f: Callable, name: str = "functional") -> Monitor:
    """``f`` receives the factored state."""
    return Monitor(name, "gradient_functional", f)


def hamiltonian_energy_monitor(system: "HamiltonianSystem", name: str = "hamiltonian") -> Monitor:
    def value(Y):
        Z = Y.reconstruct()
        return system.H(Z.real, Z.imag)

    return Monitor(name, "hamiltonian_energy", value, requires_complex=True)


def energy_gamma(H, Y1: LowRankFactor, Y1_hat: LowRankFactor) -> tuple[float, float]:
    """Energy-drift constants for one step.

    Returns ``(||H[Y1] + H[Y1_hat]||, ||H[Y1]|| + ||H[Y1_hat]||)``; the first
    is the sharp Cauchy-Schwarz constant, the second its triangle-inequality
    upper bound.
    """
    def factored(Y):
        return H.apply_factor(Y.U, Y.S, Y.V)

    U1, S1, V1 = factored(Y1)
    U2, S2, V2 = factored(Y1_hat)
    U = np.concatenate([U1, U2], axis=1)
    V = np.concatenate([V1, V2], axis=1)
    S = np.zeros((S1.shape[0] + S2.shape[0],) * 2, dtype=np.result_type(S1, S2))
    S[: S1.shape[0], : S1.shape[0]] = S1
    S[S1.shape[0]:, S1.shape[0]:] = S2
    sharp = lowrank_norm(U, S, V)
    return sharp, lowrank_norm(U1, S1, V1) + lowrank_norm(U2, S2, V2)


@dataclass
class GradientCheck:
    passed: bool
    first_violation: int | None
    max_increase: float


def check_gradient_decrease(values, h: float, theta: float, beta_bound: float) -> GradientCheck:
    """Check ``f(Y_{n+1}) <= f(Y_n) + beta_bound * theta`` along a functional log.

    ``values`` is the sequence ``f(Y_0), f(Y_1), ...``.  ``h`` is accepted for
    symmetry with the decrease estimate but does not enter the test.
    """
    v = np.asarray(values, dtype=float)
    inc = np.diff(v)
    bad = np.nonzero(inc > beta_bound * theta)[0]
    first = int(bad[0]) if bad.size else None
    return GradientCheck(first is None, first, float(inc.max()) if inc.size else 0.0)


@dataclass
class HamiltonianSystem:
    """Real Hamiltonian ``H(Q, P)`` on pairs of ``m x n`` matrices with its gradients."""

    H: Callable[[np.ndarray, np.ndarray], float]
    grad_Q: Callable[[np.ndarray, np.ndarray], np.ndarray]
    grad_P: Callable[[np.ndarray, np.ndarray], np.ndarray]
    shape: tuple[int, int]

    def energy(self, Z) -> float:
        """``E(Z, conj Z) = 2 H(Re Z, Im Z)``."""
        return 2.0 * self.H(Z.real, Z.imag)

    def gradient_norm(self, Z) -> float:
        return float(np.sqrt(frobenius_norm(self.grad_Q(Z.real, Z.imag)) ** 2
                             + frobenius_norm(self.grad_P(Z.real, Z.imag)) ** 2))


def split(Z):
    return Z.real.copy(), Z.imag.copy()


def combine(Q, P):
    return Q + 1j * P


def complexify(system: HamiltonianSystem) -> MatrixProblem:
    """Rewrite ``Q' = grad_P H, P' = -grad_Q H`` as ``Z' = -i (grad_Q H + i grad_P H)``, ``Z = Q + iP``."""

    def rhs(t, Z):
        Q, P = Z.real, Z.imag
        return -1j * (system.grad_Q(Q, P) + 1j * system.grad_P(Q, P))

    return MatrixProblem(shape=system.shape, rhs=rhs, dtype=np.complex128, energy=system.energy,
                         name="hamiltonian")


def harmonic_oscillator(shape) -> HamiltonianSystem:
    """``H = (||Q||^2 + ||P||^2) / 2``; the complex flow is ``Z(t) = exp(-it) Z0``."""
    return HamiltonianSystem(
        H=lambda Q, P: 0.5 * (frobenius_norm(Q) ** 2 + frobenius_norm(P) ** 2),
        grad_Q=lambda Q, P: Q,
        grad_P=lambda Q, P: P,
        shape=tuple(shape),
    )


def stiffness_matrix(m: int, dx: float | None = None) -> np.ndarray:
    dx = 1.0 / (m + 1) if dx is None else dx
    return (2.0 * np.eye(m) - np.eye(m, k=1) - np.eye(m, k=-1)) / dx**2


def harmonic_chain(shape, dx: float | None = None) -> HamiltonianSystem:
    """``H = <P, P>/2 + <Q, A Q>/2`` with ``A = tridiag(-1, 2, -1) / dx^2`` acting on columns."""
    A = stiffness_matrix(shape[0], dx)
    return HamiltonianSystem(
        H=lambda Q, P: 0.5 * float(np.real(inner(P, P))) + 0.5 * float(np.real(inner(Q, A @ Q))),
        grad_Q=lambda Q, P: A @ Q,
        grad_P=lambda Q, P: P,
        shape=tuple(shape),
    )


def finite_difference_gradient(H, Q, P, eps: float = 1e-6):
    """Central-difference gradients of ``H`` in ``Q`` and ``P`` (test oracle)."""
    gQ = np.zeros_like(Q)
    gP = np.zeros_like(P)
    for idx in np.ndindex(Q.shape):
        E = np.zeros_like(Q)
        E[idx] = eps
        gQ[idx] = (H(Q + E, P) - H(Q - E, P)) / (2 * eps)
        gP[idx] = (H(Q, P + E) - H(Q, P - E)) / (2 * eps)
    return gQ, gP
