"""Harmonic chain ``H = <P, P>/2 + <Q, A Q>/2`` on ``m x n`` matrices, run through
the complex rewriting ``Z = Q + iP``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..matrix_dlr import LowRankFactor, MatrixProblem
from ..structure import HamiltonianSystem, complexify, harmonic_chain, stiffness_matrix


@dataclass
class HarmonicChainProblem:
    m: int = 20
    n: int = 20
    dx: float | None = None
    system: HamiltonianSystem = field(init=False, repr=False)

    def __post_init__(self):
        self.system = harmonic_chain((self.m, self.n), self.dx)
        self.A = stiffness_matrix(self.m, self.dx)
        w, Q = np.linalg.eigh(self.A)
        self._omega = np.sqrt(w)
        self._Q = Q

    def initial_state(self) -> np.ndarray:
        """Smooth rank-3 ``Z0 = Q0 + i P0``; the profiles are not eigenvectors of ``A``."""
        x = np.arange(1, self.m + 1) / (self.m + 1)
        y = np.arange(1, self.n + 1) / (self.n + 1)
        Q0 = np.outer(np.exp(-((x - 0.4) / 0.1) ** 2), np.sin(np.pi * y)) + 0.5 * np.outer(x * (1 - x), np.cos(2 * np.pi * y))
        P0 = 0.3 * np.outer(np.exp(-((x - 0.6) / 0.15) ** 2), y * (1 - y))
        return Q0 + 1j * P0

    def initial_factor(self, rank: int = 3) -> LowRankFactor:
        return LowRankFactor.from_dense(self.initial_state(), rank)

    def problem(self) -> MatrixProblem:
        return complexify(self.system)

    def exact(self, t: float, Z0=None) -> np.ndarray:
        """``Q(t) = cos(Wt) Q0 + W^-1 sin(Wt) P0``, ``P(t) = -W sin(Wt) Q0 + cos(Wt) P0`` with ``W = sqrt(A)``."""
        Z0 = self.initial_state() if Z0 is None else Z0
        Q0, P0 = self._Q.T @ Z0.real, self._Q.T @ Z0.imag
        w = self._omega[:, None]
        c, s = np.cos(w * t), np.sin(w * t)
        Q = c * Q0 + s / w * P0
        P = -w * s * Q0 + c * P0
        return self._Q @ Q + 1j * (self._Q @ P)
