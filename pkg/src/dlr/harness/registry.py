"""Build a ready-to-integrate setup (problem, initial value, step size, error oracle) from a run config."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import expm

from ..linalg import frobenius_norm, multi_mode_product, qr
from ..matrix_dlr import LowRankFactor, MatrixProblem
from ..problems.burgers import BurgersUQProblem
from ..problems.hamiltonian import HarmonicChainProblem
from ..problems.sec51 import Sec51Problem
from ..problems.synthetic import RankRPath, TuckerPath, gradient_flow_problem, random_tucker
from ..problems.transport import TransportProblem
from ..structure import (
    ConfigError,
    Monitor,
    gradient_functional_monitor,
    hamiltonian_energy_monitor,
    norm_monitor,
    schroedinger_energy_monitor,
    symmetry_defect_monitor,
)
from ..tucker_dlr import TensorProblem, TuckerFactor
from .config import RunConfig


@dataclass
class Setup:
    kind: str  # "matrix" or "tucker"
    problem: MatrixProblem | TensorProblem
    Y0: LowRankFactor | TuckerFactor
    h: float
    steps: int
    error: Callable | None = None
    monitors: dict = field(default_factory=dict)
    model: object = None


def pad_factor(Y: LowRankFactor, r: int) -> LowRankFactor:
    """Extend ``Y`` to rank ``r`` with orthonormal complements and zero singular values."""
    k = Y.rank
    if r <= k:
        return Y
    m, n = Y.shape
    if r > min(m, n):
        raise ConfigError(f"field 'rank': {r} exceeds the matrix dimensions {m}x{n}")

    def extend(B):
        Q, _ = qr(np.concatenate([B, np.eye(B.shape[0], dtype=B.dtype)], axis=1))
        return np.concatenate([B, Q[:, k:r]], axis=1)

    S = np.zeros((r, r), dtype=Y.S.dtype)
    S[:k, :k] = Y.S
    return LowRankFactor(extend(Y.U), S, extend(Y.V))


def _params(cfg: RunConfig, allowed: dict) -> dict:
    unknown = set(cfg.params) - set(allowed)
    if unknown:
        raise ConfigError(f"field 'params': unknown keys for {cfg.problem}: {sorted(unknown)}")
    out = dict(allowed)
    out.update(cfg.params)
    return out


def _fixed_h(cfg: RunConfig) -> tuple[float, int]:
    if cfg.cfl is not None:
        raise ConfigError(f"field 'cfl': not used by problem {cfg.problem}; give h")
    if cfg.h is None:
        raise ConfigError(f"field 'h': required for problem {cfg.problem}")
    steps = int(round(cfg.T / cfg.h))
    if steps < 1 or abs(steps * cfg.h - cfg.T) > 1e-9 * cfg.T:
        raise ConfigError(f"field 'h': T = {cfg.T} is not a multiple of h = {cfg.h}")
    return cfg.T / steps, steps


def _scalar_rank(cfg: RunConfig, default: int) -> int:
    if cfg.rank is None:
        return default
    if isinstance(cfg.rank, list):
        raise ConfigError(f"field 'rank': problem {cfg.problem} takes a single rank")
    return int(cfg.rank)


def _monitors(**factories) -> dict:
    base = {"norm": norm_monitor}
    base.update(factories)
    return base


def _dense_error(reference):
    return lambda t, Y: frobenius_norm(Y.reconstruct() - reference(t))


def build_sec51(cfg: RunConfig) -> Setup:
    p = _params(cfg, {"n": 100, "symmetric": False, "reference": "full"})
    model = Sec51Problem(n=p["n"], seed=cfg.seed)
    h, steps = _fixed_h(cfg)
    r = _scalar_rank(cfg, 8)
    if p["symmetric"]:
        Y0 = model.symmetric_initial_factor(r)
        full = model.Y0_symmetric
    else:
        Y0 = model.initial_factor(r)
        full = model.Y0
    if p["reference"] == "initial":
        full = Y0.reconstruct()
    elif p["reference"] != "full":
        raise ConfigError("field 'params.reference': expected 'full' or 'initial'")
    return Setup(
        "matrix", model.problem(), Y0, h, steps,
        error=_dense_error(lambda t: model.reference(t, full)),
        monitors=_monitors(
            symmetry_defect=symmetry_defect_monitor,
            schroedinger_energy=lambda: schroedinger_energy_monitor(model.hamiltonian),
        ),
        model=model,
    )


def build_schroedinger(cfg: RunConfig) -> Setup:
    p = _params(cfg, {"n": 100})
    model = Sec51Problem(n=p["n"], seed=cfg.seed, normalize=True)
    h, steps = _fixed_h(cfg)
    Y0 = model.initial_factor(_scalar_rank(cfg, 8)).astype(np.complex128)
    Y0_dense = Y0.reconstruct()
    return Setup(
        "matrix", model.schroedinger_problem(), Y0, h, steps,
        error=_dense_error(lambda t: model.schroedinger_reference(t, Y0_dense)),
        monitors=_monitors(
            symmetry_defect=symmetry_defect_monitor,
            schroedinger_energy=lambda: schroedinger_energy_monitor(model.hamiltonian),
        ),
        model=model,
    )


class _LockstepOracle:
    """Full-rank reference advanced alongside the low-rank run."""

    def __init__(self, state, advance, dt):
        self.state = state
        self.advance = advance
        self.dt = dt
        self.t = 0.0

    def at(self, t):
        n = int(round((t - self.t) / self.dt))
        if n < 0:
            raise ValueError("oracle cannot run backwards")
        for _ in range(n):
            self.state = self.advance(self.state)
        self.t += n * self.dt
        return self.state


def build_transport(cfg: RunConfig) -> Setup:
    p = _params(cfg, {"nx": 200, "n_moments": 64, "sigma_s": 1.0, "width": 3e-2, "cfl": 0.99,
                      "viscosity": "matrix", "a": -5.0, "b": 5.0})
    if cfg.h is not None:
        raise ConfigError("field 'h': transport takes its step from the CFL number")
    cfl = cfg.cfl if cfg.cfl is not None else p["cfl"]
    model = TransportProblem(nx=p["nx"], n_moments=p["n_moments"], a=p["a"], b=p["b"],
                             sigma_s=p["sigma_s"], width=p["width"], cfl=cfl, T=cfg.T,
                             viscosity=p["viscosity"])
    Y0 = pad_factor(model.initial_factor(), _scalar_rank(cfg, 1))
    oracle = _LockstepOracle(model.initial_state(), lambda Y: Y + model.dt * model.rhs(0.0, Y), model.dt)

    def error(t, Y):
        ref = model.scalar_flux(oracle.at(t))
        return float(np.linalg.norm(model.scalar_flux_factored(Y) - ref) / np.linalg.norm(ref))

    return Setup("matrix", model.problem(), Y0, model.dt, model.steps, error=error,
                 monitors=_monitors(symmetry_defect=symmetry_defect_monitor), model=model)


def build_burgers(cfg: RunConfig) -> Setup:
    p = _params(cfg, {"nx": 200, "p1": 9, "p2": 9, "cfl": 0.99, "oracle_quadrature": 50})
    if cfg.h is not None:
        raise ConfigError("field 'h': burgers takes its step from the CFL number")
    cfl = cfg.cfl if cfg.cfl is not None else p["cfl"]
    model = BurgersUQProblem(nx=p["nx"], p1=p["p1"], p2=p["p2"], cfl=cfl, T=cfg.T)
    r = _scalar_rank(cfg, 40)
    Y0 = model.initial_factor(r)
    if Y0.rank < r:
        Y0 = pad_factor(Y0, r)
    nq = p["oracle_quadrature"]

    def error(t, Y):
        mean, _ = model.oracle(t, nq)
        E = Y.U @ (Y.S @ Y.V.T[:, 0])
        return float(np.sum(np.abs(E - mean)) * model.dx)

    return Setup("matrix", model.problem(), Y0, model.dt, model.steps, error=error,
                 monitors=_monitors(symmetry_defect=symmetry_defect_monitor), model=model)


def build_gradient_flow(cfg: RunConfig) -> Setup:
    p = _params(cfg, {"n": 40, "target_rank": 3})
    model = gradient_flow_problem(p["n"], p["target_rank"], cfg.seed)
    h, steps = _fixed_h(cfg)
    r = _scalar_rank(cfg, 2)
    rng = np.random.default_rng(cfg.seed + 1)
    Y0 = LowRankFactor.from_dense(rng.standard_normal((p["n"], r)) @ rng.standard_normal((r, p["n"])) / np.sqrt(p["n"]), r)
    Y0_dense = Y0.reconstruct()
    T = model.target
    return Setup(
        "matrix", model.problem(), Y0, h, steps,
        error=_dense_error(lambda t: T + np.exp(-t) * (Y0_dense - T)),
        monitors=_monitors(
            symmetry_defect=symmetry_defect_monitor,
            gradient_functional=lambda: gradient_functional_monitor(model.value_factored, "functional"),
        ),
        model=model,
    )


def build_hamiltonian(cfg: RunConfig) -> Setup:
    p = _params(cfg, {"m": 20, "n": 20, "dx": None})
    model = HarmonicChainProblem(p["m"], p["n"], p["dx"])
    h, steps = _fixed_h(cfg)
    Y0 = model.initial_factor(_scalar_rank(cfg, 3))
    Z0 = Y0.reconstruct()
    return Setup(
        "matrix", model.problem(), Y0, h, steps,
        error=_dense_error(lambda t: model.exact(t, Z0)),
        monitors=_monitors(
            symmetry_defect=symmetry_defect_monitor,
            hamiltonian_energy=lambda: hamiltonian_energy_monitor(model.system),
        ),
        model=model,
    )


def build_synthetic(cfg: RunConfig) -> Setup:
    p = _params(cfg, {"m": 64, "n": 48, "r": 5})
    model = RankRPath(p["m"], p["n"], p["r"], cfg.seed)
    h, steps = _fixed_h(cfg)
    Y0 = pad_factor(model.initial_factor(0.0), _scalar_rank(cfg, p["r"]))
    return Setup("matrix", model.problem(), Y0, h, steps, error=_dense_error(model.A),
                 monitors=_monitors(symmetry_defect=symmetry_defect_monitor), model=model)


def _linear_tucker(dims, seed):
    rng = np.random.default_rng(seed + 7)
    ops = [rng.standard_normal((n, n)) / np.sqrt(n) for n in dims]

    def rhs(t, Y):
        return sum(_mode(Y, i, A) for i, A in enumerate(ops))

    return ops, rhs


def _mode(Y, i, A):
    mats = [None] * Y.ndim
    mats[i] = A
    return multi_mode_product(Y, mats)


def build_custom_tucker(cfg: RunConfig) -> Setup:
    p = _params(cfg, {"dims": [8, 9, 10], "rhs": "zero"})
    dims = tuple(int(n) for n in p["dims"])
    if not 1 <= len(dims) <= 8:
        raise ConfigError("field 'params.dims': tensor order must be between 1 and 8")
    if cfg.rank is None:
        ranks = (2,) * len(dims)
    elif isinstance(cfg.rank, list):
        ranks = tuple(cfg.rank)
    else:
        ranks = (int(cfg.rank),) * len(dims)
    if len(ranks) != len(dims):
        raise ConfigError("field 'rank': one rank per tensor mode is required")
    if cfg.integrator != "adaptive":
        raise ConfigError("field 'integrator': custom-tucker supports only the adaptive integrator")
    h, steps = _fixed_h(cfg)
    kind = p["rhs"]
    if kind == "zero":
        Y0 = random_tucker(dims, ranks, cfg.seed)
        ref = Y0.reconstruct()
        problem = TensorProblem(dims=dims, rhs=lambda t, Y: np.zeros_like(Y), name="zero")
        reference = lambda t: ref
    elif kind == "path":
        model = TuckerPath(dims, ranks, cfg.seed)
        Y0 = model.initial_factor(0.0)
        problem = model.problem()
        reference = model.A
    elif kind == "linear":
        Y0 = random_tucker(dims, ranks, cfg.seed)
        ops, rhs = _linear_tucker(dims, cfg.seed)
        problem = TensorProblem(dims=dims, rhs=rhs, name="linear")
        ref0 = Y0.reconstruct()
        reference = lambda t: multi_mode_product(ref0, [expm(t * A) for A in ops])
    else:
        raise ConfigError("field 'params.rhs': expected 'zero', 'path' or 'linear'")
    return Setup("tucker", problem, Y0, h, steps,
                 error=lambda t, Y: frobenius_norm(Y.reconstruct() - reference(t)),
                 monitors=_monitors())


BUILDERS = {
    "sec51": build_sec51,
    "schroedinger": build_schroedinger,
    "transport": build_transport,
    "burgers": build_burgers,
    "gradient_flow": build_gradient_flow,
    "hamiltonian": build_hamiltonian,
    "synthetic_exactness": build_synthetic,
    "custom-tucker": build_custom_tucker,
}


def build(cfg: RunConfig) -> Setup:
    setup = BUILDERS[cfg.problem](cfg)
    if setup.kind == "tucker" and cfg.integrator == "fixed_rank":
        raise ConfigError("field 'integrator': no fixed-rank Tucker integrator")
    return setup


def make_monitors(setup: Setup, kinds) -> list[Monitor]:
    out = []
    for kind in kinds:
        if kind not in setup.monitors:
            raise ConfigError(f"field 'monitors': {kind!r} is not available for this problem")
        out.append(setup.monitors[kind]())
    return out
