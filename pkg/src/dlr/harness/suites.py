"""Invariant and acceptance suites behind ``dlr check``.

Each criterion returns a :class:`Criterion` with one :class:`Check` per
measured quantity.  Results are memoized so the projected-initial-value check can reuse the
step reports of every other run.
"""
from __future__ import annotations

import functools
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from ..linalg import frobenius_norm
from ..matrix_dlr import LowRankFactor, MatrixProblem, TruncationPolicy, adaptive_matrix_step
from ..problems.synthetic import RankRPath
from ..rk import SubstepMethod
from ..structure import check_gradient_decrease, energy_gamma
from ..tucker_dlr import TensorProblem, TuckerFactor, adaptive_tucker_step
from .config import RunConfig
from .runner import RunResult, execute, loglog_slope

PROJECTION_BOUND = 1e-12

# projection ratios of every adaptive step taken by the acceptance runs, keyed by criterion
_PROJECTION: dict[int, list] = {}


@dataclass
class Check:
    name: str
    value: float
    bound: str
    passed: bool


@dataclass
class Criterion:
    id: int
    name: str
    checks: list = field(default_factory=list)
    runtime_s: float = 0.0
    notes: str = ""

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def add(self, name, value, passed, bound):
        self.checks.append(Check(name, float(value), bound, bool(passed)))

    def line(self) -> str:
        verdict = "PASS" if self.passed else "FAIL"
        detail = "; ".join(f"{c.name}={c.value:.4g} ({c.bound}) {'ok' if c.passed else 'FAILED'}" for c in self.checks)
        return f"[{verdict}] criterion {self.id:2d} {self.name}: {detail}"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["passed"] = self.passed
        return d


def _record(cid: int, results):
    bucket = _PROJECTION.setdefault(cid, [])
    for res in results:
        reports = res.reports if isinstance(res, RunResult) else res
        bucket.extend(r.diagnostics["projection_ratio"] for r in reports if "projection_ratio" in r.diagnostics)


def _cfg(**kw) -> RunConfig:
    sub = kw.pop("substep", ("rk2", 1))
    tr = kw.pop("truncation", ("absolute", 1e-6))
    d = dict(kw)
    d["substep"] = {"method": sub[0], "count": sub[1]}
    d["truncation"] = {"mode": tr[0], "tau": tr[1]}
    d.setdefault("plots", False)
    return RunConfig.from_dict(d)


@functools.lru_cache(maxsize=None)
def exactness() -> Criterion:
    c = Criterion(1, "exactness (rank-5 path, 64x48, one step)")
    path = RankRPath(64, 48, 5, seed=0)
    path.check_exactness_conditions(0.0, 0.1)
    start = time.perf_counter()
    Y1, rep = adaptive_matrix_step(path.initial_factor(0.0), path.problem(), 0.0, 0.1,
                                   SubstepMethod("rk4", 64), TruncationPolicy(1e-14, "absolute", r_min=1),
                                   debug=True)
    c.runtime_s = time.perf_counter() - start
    _record(1, [[rep]])
    err = frobenius_norm(Y1.reconstruct() - path.A(0.1))
    c.add("error", err, err <= 1e-9, "<= 1e-9")
    c.add("runtime_s", c.runtime_s, c.runtime_s < 1.0, "< 1 s")
    return c


@functools.lru_cache(maxsize=None)
def convergence() -> Criterion:
    c = Criterion(3, "convergence (n=100, r0=8, theta=1e-6, RK2)")
    start = time.perf_counter()
    T = 0.1
    hs, errs, runs = [], [], []
    for k in range(7):
        h = T / 2**k
        res = execute(_cfg(problem="sec51", integrator="adaptive", T=T, h=h, rank=8,
                           substep=("rk2", 1), truncation=("absolute", 1e-6)))
        hs.append(h)
        errs.append(res.final_error)
        runs.append(res)
    fixed = execute(_cfg(problem="sec51", integrator="fixed_rank", T=T, h=hs[-1], rank=8, substep=("rk2", 1)))
    c.runtime_s = time.perf_counter() - start
    _record(3, runs)
    slope = loglog_slope(hs, errs)
    c.add("loglog_slope", slope, 0.8 <= slope <= 1.5, "in [0.8, 1.5]")
    c.add("adaptive_error_smallest_h", errs[-1], errs[-1] < fixed.final_error,
          f"< fixed-rank-8 error {fixed.final_error:.4g}")
    rank = runs[-1].final_rank
    c.add("final_rank", rank, 12 <= rank <= 16, "in [12, 16]")
    c.add("runtime_s", c.runtime_s, c.runtime_s < 30, "< 30 s")
    c.notes = "errors: " + ", ".join(f"{e:.3e}" for e in errs) + f"; ranks: {[r.final_rank for r in runs]}"
    return c


@functools.lru_cache(maxsize=None)
def _schroedinger_run():
    theta = 1e-8
    cfg = _cfg(problem="schroedinger", integrator="adaptive", T=1.0, h=0.01, rank=8,
               substep=("rk4", 64), truncation=("absolute", theta), monitors=["schroedinger_energy"])
    from .registry import build

    H = build(cfg).model.hamiltonian
    gammas = []

    def cb(k, Y, rep, row):
        gammas.append(energy_gamma(H, Y, rep.augmented))

    start = time.perf_counter()
    res = execute(cfg, callback=cb)
    elapsed = time.perf_counter() - start
    Y0 = build(cfg).Y0
    from ..structure import schroedinger_energy

    n0 = frobenius_norm(Y0.S)
    e0 = schroedinger_energy(H, Y0)
    return res, gammas, n0, e0, theta, elapsed


@functools.lru_cache(maxsize=None)
def norm() -> Criterion:
    c = Criterion(4, "norm conservation (Schroedinger, RK4/64, theta=1e-8, 100 steps)")
    res, _, n0, _, theta, elapsed = _schroedinger_run()
    _record(4, [res])
    norms = np.array([n0] + [r["norm"] for r in res.rows])
    per_step = np.abs(np.diff(norms))
    c.add("max_step_drift", per_step.max(), per_step.max() <= 2 * theta, "<= 2 theta")
    total = abs(norms[-1] - norms[0])
    c.add("cumulative_drift", total, total <= 200 * theta, "<= 200 theta")
    c.runtime_s = elapsed
    return c


@functools.lru_cache(maxsize=None)
def energy() -> Criterion:
    c = Criterion(5, "energy conservation (Schroedinger, per-step drift <= 2 gamma theta)")
    res, gammas, _, e0, theta, elapsed = _schroedinger_run()
    energies = np.array([e0] + [r["energy"] for r in res.rows])
    drift = np.abs(np.diff(energies))
    gamma = np.array([g[1] for g in gammas])
    ratio = drift / (2 * gamma * theta)
    c.add("max_drift_over_bound", ratio.max(), ratio.max() <= 1.0, "<= 1")
    c.add("max_step_drift", drift.max(), True, "reported")
    c.runtime_s = elapsed
    return c


@functools.lru_cache(maxsize=None)
def gradient() -> Criterion:
    c = Criterion(6, "gradient flow (40x40, rank-3 target, RK4/8, theta=1e-8, 50 steps)")
    theta = 1e-8
    cfg = _cfg(problem="gradient_flow", integrator="adaptive", T=5.0, h=0.1, rank=2,
               substep=("rk4", 8), truncation=("absolute", theta), monitors=["gradient_functional"])
    from .registry import build

    setup = build(cfg)
    model = setup.model
    grads = [frobenius_norm(setup.Y0.reconstruct() - model.target)]
    start = time.perf_counter()
    res = execute(cfg, callback=lambda k, Y, rep, row: grads.append(frobenius_norm(Y.reconstruct() - model.target)))
    c.runtime_s = time.perf_counter() - start
    _record(6, [res])
    f = [model.value_factored(setup.Y0)] + [r["functional"] for r in res.rows]
    beta = 2 * max(grads)
    chk = check_gradient_decrease(f, cfg.h, theta, beta)
    c.add("max_increase", chk.max_increase, chk.passed, f"<= beta theta = {beta * theta:.3g}")
    c.add("final_over_initial", f[-1] / f[0], f[-1] < 1e-3 * f[0], "< 1e-3")
    return c


@functools.lru_cache(maxsize=None)
def symmetry() -> Criterion:
    c = Criterion(7, "symmetry (symmetric Y0, 50 steps)")
    cfg = _cfg(problem="sec51", integrator="adaptive", T=0.1, h=0.002, rank=8, params={"symmetric": True},
               substep=("rk2", 1), truncation=("absolute", 1e-6), monitors=["symmetry_defect"])
    start = time.perf_counter()
    res = execute(cfg)
    c.runtime_s = time.perf_counter() - start
    _record(7, [res])
    rel = max(r["symmetry_defect"] / r["norm"] for r in res.rows)
    c.add("max_relative_defect", rel, rel <= 1e-12, "<= 1e-12")
    c.add("steps", len(res.rows), len(res.rows) == 50, "== 50")
    return c


@functools.lru_cache(maxsize=None)
def hamiltonian() -> Criterion:
    c = Criterion(8, "Hamiltonian energy (harmonic chain, RK4/32, theta=1e-8, 200 steps)")
    theta = 1e-8
    cfg = _cfg(problem="hamiltonian", integrator="adaptive", T=2.0, h=0.01, rank=3,
               substep=("rk4", 32), truncation=("absolute", theta), monitors=["hamiltonian_energy"])
    from .registry import build

    setup = build(cfg)
    system = setup.model.system
    Z0 = setup.Y0.reconstruct()
    grads = [system.gradient_norm(Z0)]
    start = time.perf_counter()
    res = execute(cfg, callback=lambda k, Y, rep, row: grads.append(system.gradient_norm(Y.reconstruct())))
    c.runtime_s = time.perf_counter() - start
    _record(8, [res])
    H = np.array([system.H(Z0.real, Z0.imag)] + [r["hamiltonian"] for r in res.rows])
    drift = np.abs(np.diff(H))
    beta = max(grads)
    c.add("max_step_drift", drift.max(), drift.max() <= 2 * beta * theta, f"<= 2 beta theta = {2 * beta * theta:.3g}")
    c.add("steps", len(res.rows), len(res.rows) == 200, "== 200")
    return c


@functools.lru_cache(maxsize=None)
def tucker_equivalence() -> Criterion:
    c = Criterion(9, "Tucker d=2 equivalence (10 seeds, 20x30, rank 3)")
    method = SubstepMethod("rk4", 4)
    policy = TruncationPolicy(1e-12, "absolute")
    worst = 0.0
    reports = []
    start = time.perf_counter()
    for seed in range(10):
        rng = np.random.default_rng(100 + seed)
        A = rng.standard_normal((20, 20)) / np.sqrt(20)
        B = rng.standard_normal((30, 30)) / np.sqrt(30)
        rhs = lambda t, Y, A=A, B=B: A @ Y + Y @ B.T
        Y0 = LowRankFactor.from_dense(rng.standard_normal((20, 3)) @ rng.standard_normal((3, 30)), 3)
        _, rm = adaptive_matrix_step(Y0, MatrixProblem((20, 30), rhs), 0.0, 0.1, method, policy, debug=True)
        _, rt = adaptive_tucker_step(TuckerFactor(Y0.S.copy(), [Y0.U, Y0.V]), TensorProblem((20, 30), rhs),
                                     0.0, 0.1, method, policy, debug=True)
        reports += [rm, rt]
        worst = max(worst, frobenius_norm(rm.augmented.reconstruct() - rt.augmented.reconstruct()))
    c.runtime_s = time.perf_counter() - start
    _record(9, [reports])
    c.add("max_difference", worst, worst <= 1e-10, "<= 1e-10")
    return c


@functools.lru_cache(maxsize=None)
def tucker_exactness() -> Criterion:
    c = Criterion(10, "Tucker exactness (dims 8x9x10, rank (2,2,2), one step)")
    cfg = _cfg(problem="custom-tucker", integrator="adaptive", T=0.1, h=0.1, rank=[2, 2, 2],
               params={"dims": [8, 9, 10], "rhs": "path"}, substep=("rk4", 64), truncation=("absolute", 1e-14),
               debug=True)
    start = time.perf_counter()
    res = execute(cfg)
    c.runtime_s = time.perf_counter() - start
    _record(10, [res])
    c.add("error", res.final_error, res.final_error <= 1e-9, "<= 1e-9")
    return c


@functools.lru_cache(maxsize=None)
def transport() -> Criterion:
    c = Criterion(11, "transport (Nx=200, N+1=64, theta=0.1 sigma_1, T=5)")
    cfg = _cfg(problem="transport", integrator="adaptive", T=5.0, rank=1,
               substep=("rk1", 1), truncation=("relative", 0.1))
    start = time.perf_counter()
    res = execute(cfg)
    c.runtime_s = time.perf_counter() - start
    _record(11, [res])
    ranks = res.ranks
    c.add("initial_rank", res.reports[0].rank_before, res.reports[0].rank_before == 1, "== 1")
    c.add("max_rank_before_T", max(ranks[:-1]), max(ranks[:-1]) >= 5, ">= 5")
    c.add("final_rank", ranks[-1], ranks[-1] < max(ranks), f"< max rank {max(ranks)}")
    c.add("scalar_flux_rel_error", res.final_error, res.final_error <= 0.05, "<= 0.05")
    c.add("runtime_s", c.runtime_s, c.runtime_s < 120, "< 120 s")
    return c


@functools.lru_cache(maxsize=None)
def burgers() -> Criterion:
    c = Criterion(12, "Burgers (Nx=200, 10x10 basis, theta=0.015 sigma_1, T=0.04)")
    base = dict(problem="burgers", T=0.04, substep=("rk1", 1))
    start = time.perf_counter()
    ada = execute(_cfg(integrator="adaptive", rank=40, truncation=("relative", 0.015), **base))
    ranks = ada.ranks
    rmin, rmax = min(ranks), max(ranks)
    fix_min = execute(_cfg(integrator="fixed_rank", rank=rmin, **base))
    fix_max = fix_min if rmax == rmin else execute(_cfg(integrator="fixed_rank", rank=rmax, **base))
    c.runtime_s = time.perf_counter() - start
    _record(12, [ada])
    e = ada.final_error
    c.add("adaptive_L1_error", e, e <= fix_min.final_error, f"<= fixed r={rmin}: {fix_min.final_error:.4g}")
    c.add("adaptive_over_fixed_max", e / fix_max.final_error, e <= 1.2 * fix_max.final_error,
          f"<= 1.2 (fixed r={rmax})")
    model_ts = 0.1 / (12.0 - (1.0 + 5.0))  # latest shock formation time over xi2
    forming = [r for row, r in zip(ada.rows, ranks) if row["t"] <= model_ts]
    nondecr = all(b >= a for a, b in zip(forming, forming[1:]))
    c.add("rank_nondecreasing_while_forming", float(nondecr), nondecr, "== 1")
    c.add("runtime_s", c.runtime_s, c.runtime_s < 180, "< 180 s")
    c.notes = f"adaptive ranks min {rmin} max {rmax}"
    return c


def projection_check() -> Criterion:
    c = Criterion(2, "projected initial value on every adaptive step")
    # memoized, so this only runs what has not run yet
    for fn in (exactness, convergence, norm, gradient, symmetry, hamiltonian, tucker_equivalence,
               tucker_exactness, transport, burgers):
        fn()
    ratios = np.array([r for v in _PROJECTION.values() for r in v])
    bad = int(np.sum(ratios > PROJECTION_BOUND))
    c.add("steps_checked", ratios.size, ratios.size > 0, "> 0")
    c.add("max_ratio", ratios.max(), ratios.max() <= PROJECTION_BOUND, "<= 1e-12 ||S0||")
    c.add("violations", bad, bad == 0, "== 0")
    return c


CRITERIA = {
    1: exactness, 2: projection_check, 3: convergence, 4: norm, 5: energy, 6: gradient, 7: symmetry,
    8: hamiltonian, 9: tucker_equivalence, 10: tucker_exactness, 11: transport, 12: burgers,
}

SUITES = {
    "exactness": [1, 10],
    "lemma": [2],
    "convergence": [3],
    "norm": [4],
    "energy": [5],
    "gradient": [6],
    "symmetry": [7],
    "hamiltonian": [8],
    "tucker": [9, 10],
    "transport": [11],
    "burgers": [12],
    "structure": [4, 5, 6, 7, 8],
    "acceptance": [1, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 2],
}


def run_suite(name: str) -> list[Criterion]:
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    return [CRITERIA[i]() for i in SUITES[name]]
