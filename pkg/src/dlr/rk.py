"""Explicit Runge-Kutta driver shared by the K-, L-, S- and core substeps."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KINDS = ("rk1", "rk2", "rk4")


class SubstepDiverged(RuntimeError):
    """Raised when a substep integration produces non-finite values."""

    def __init__(self, substep: str, step: int | None = None):
        self.substep = substep
        self.step = step
        where = f" at step {step}" if step is not None else ""
        super().__init__(f"substep diverged: {substep}{where}")


@dataclass(frozen=True)
class SubstepMethod:
    """Explicit RK scheme applied over ``substeps`` equal sub-intervals.

    ``kind`` is one of ``"rk1"`` (explicit Euler), ``"rk2"`` (Heun) or
    ``"rk4"`` (classical).
    """

    kind: str = "rk2"
    substeps: int = 1

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown RK kind {self.kind!r}; expected one of {KINDS}")
        if int(self.substeps) < 1:
            raise ValueError("substeps must be >= 1")


def _rk1(f, t, x, dt):
    return x + dt * f(t, x)


def _rk2(f, t, x, dt):
    k1 = f(t, x)
    k2 = f(t + dt, x + dt * k1)
    return x + 0.5 * dt * (k1 + k2)


def _rk4(f, t, x, dt):
    k1 = f(t, x)
    k2 = f(t + 0.5 * dt, x + 0.5 * dt * k1)
    k3 = f(t + 0.5 * dt, x + 0.5 * dt * k2)
    k4 = f(t + dt, x + dt * k3)
    return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


_SCHEMES = {"rk1": _rk1, "rk2": _rk2, "rk4": _rk4}


def rk_integrate(f, X0, t0: float, h: float, method: SubstepMethod, name: str = "rk"):
    """Integrate ``X' = f(t, X)`` from ``t0`` to ``t0 + h``.

    Parameters
    ----------
    f : callable
        Right-hand side ``f(t, X)`` returning an array shaped like ``X``.
    X0 : ndarray
        Initial state.
    t0, h : float
        Start time and (positive) interval length.
    method : SubstepMethod
        Scheme and number of equal sub-intervals.
    name : str
        Label carried by :class:`SubstepDiverged` on failure.
    """
    if not h > 0:
        raise ValueError("h must be positive")
    scheme = _SCHEMES[method.kind]
    n = int(method.substeps)
    dt = h / n
    x = np.asarray(X0)
    for k in range(n):
        x = scheme(f, t0 + k * dt, x, dt)
        if not np.all(np.isfinite(x)):
            raise SubstepDiverged(name)
    return x
