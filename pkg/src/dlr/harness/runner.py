"""Execute runs and sweeps and write their artifacts."""
from __future__ import annotations

import copy
import csv
import logging
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..matrix_dlr import TruncationPolicy, adaptive_matrix_step, fixed_rank_matrix_step
from ..rk import SubstepDiverged, SubstepMethod
from ..structure import monitor_step
from ..tucker_dlr import adaptive_tucker_step
from .config import RunConfig, SweepConfig
from .registry import build, make_monitors
from .svg import line_plot

logger = logging.getLogger(__name__)


class RunError(RuntimeError):
    """A run stopped before reaching the end time."""


def thread_cap() -> int:
    raw = os.environ.get("DLR_THREADS", "")
    try:
        return max(1, int(raw)) if raw else os.cpu_count() or 1
    except ValueError:
        return 1


def fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) or isinstance(v, str):
        return str(v)
    return "%.17g" % float(v)


def rank_label(rank) -> str:
    return rank if isinstance(rank, str) else str(rank)


@dataclass
class RunResult:
    config: RunConfig
    rows: list
    columns: list
    reports: list
    final: object
    wall_time: float
    monitors: list = field(default_factory=list)

    @property
    def ranks(self) -> list:
        return [r["rank"] for r in self.rows]

    @property
    def errors(self) -> list:
        return [r["err_vs_oracle"] for r in self.rows]

    @property
    def final_error(self):
        return self.rows[-1]["err_vs_oracle"] if self.rows else None

    @property
    def final_rank(self):
        return self.rows[-1]["rank"] if self.rows else None

    @property
    def projection_ratios(self) -> list:
        return [rep.diagnostics.get("projection_ratio") for rep in self.reports if "projection_ratio" in rep.diagnostics]


def execute(cfg: RunConfig, callback=None) -> RunResult:
    """Integrate per ``cfg`` without writing files."""
    setup = build(cfg)
    monitors = make_monitors(setup, cfg.monitors)
    method = SubstepMethod(cfg.method, cfg.substeps)
    policy = TruncationPolicy(cfg.tau, cfg.mode, cfg.r_min, cfg.r_max)
    parallel = cfg.parallel and thread_cap() > 1
    base = ["step", "t", "rank", "discarded_mass", "norm"]
    for mon in monitors:
        if mon.name in base or mon.name == "err_vs_oracle":
            mon.name = f"monitor_{mon.name}"
    columns = base + [m.name for m in monitors] + ["err_vs_oracle"]
    rows, reports = [], []
    start = time.perf_counter()
    with np.errstate(over="ignore", invalid="ignore"):
        # overflow is reported through SubstepDiverged instead
        final = _steps(setup, cfg, method, policy, parallel, monitors, rows, reports, callback)
    wall = time.perf_counter() - start
    return RunResult(cfg, rows, columns, reports, final, wall, monitors)


def _steps(setup, cfg, method, policy, parallel, monitors, rows, reports, callback):
    Y = setup.Y0
    for k in range(setup.steps):
        t0 = k * setup.h
        try:
            if setup.kind == "tucker":
                Y, rep = adaptive_tucker_step(Y, setup.problem, t0, setup.h, method, policy,
                                              debug=cfg.debug, parallel=parallel)
                rank = "x".join(str(r) for r in Y.ranks)
                discarded = rep.total_discarded
                norm = float(np.linalg.norm(Y.core))
            else:
                if cfg.integrator == "fixed_rank":
                    Y, rep = fixed_rank_matrix_step(Y, setup.problem, t0, setup.h, method, parallel=parallel)
                else:
                    Y, rep = adaptive_matrix_step(Y, setup.problem, t0, setup.h, method, policy,
                                                  debug=cfg.debug, parallel=parallel)
                rank = Y.rank
                discarded = rep.discarded_mass
                norm = float(np.linalg.norm(Y.S))
        except SubstepDiverged as exc:
            raise RunError(f"substep diverged at step {k + 1}: {exc.substep}") from exc
        t1 = (k + 1) * setup.h
        row = {"step": k + 1, "t": t1, "rank": rank, "discarded_mass": discarded, "norm": norm}
        for mon in monitors:
            row[mon.name] = monitor_step(mon, t1, Y)
        row["err_vs_oracle"] = setup.error(t1, Y) if setup.error is not None else None
        rows.append(row)
        reports.append(rep)
        if callback is not None:
            callback(k, Y, rep, row)
    return Y


def write_steps_csv(path, result: RunResult) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(result.columns)
        for row in result.rows:
            w.writerow([fmt(row[c]) for c in result.columns])


def _rank_number(rank) -> float:
    if isinstance(rank, str):
        return float(max(int(r) for r in rank.split("x")))
    return float(rank)


def write_summary(path, result: RunResult) -> None:
    cfg = result.config
    ranks = [_rank_number(r) for r in result.ranks]
    lines = [
        f"problem: {cfg.problem}",
        f"integrator: {cfg.integrator}",
        f"steps: {len(result.rows)}",
        f"final_time: {fmt(result.rows[-1]['t']) if result.rows else ''}",
        f"final_rank: {rank_label(result.final_rank)}",
        f"max_rank: {int(max(ranks)) if ranks else ''}",
        f"min_rank: {int(min(ranks)) if ranks else ''}",
        f"final_error: {fmt(result.final_error) if result.final_error is not None else 'n/a'}",
        f"wall_time_s: {result.wall_time:.3f}",
    ]
    Path(path).write_text("\n".join(lines) + "\n")


def run(cfg: RunConfig, out_dir=None) -> RunResult:
    """Integrate and write ``steps.csv``, ``summary.txt`` and, optionally, ``rank.svg``."""
    out = Path(out_dir or cfg.output)
    result = execute(cfg)
    out.mkdir(parents=True, exist_ok=True)
    write_steps_csv(out / "steps.csv", result)
    write_summary(out / "summary.txt", result)
    if cfg.plots and result.rows:
        ts = [r["t"] for r in result.rows]
        svg = line_plot([("rank", ts, [_rank_number(r) for r in result.ranks])],
                        title=f"{cfg.problem}: rank", xlabel="t", ylabel="rank")
        (out / "rank.svg").write_text(svg)
        errs = result.errors
        if all(e is not None for e in errs):
            svg = line_plot([("error", ts, errs)], title=f"{cfg.problem}: error vs oracle",
                            xlabel="t", ylabel="error", logy=True)
            (out / "error.svg").write_text(svg)
    return result


@dataclass
class SweepResult:
    config: SweepConfig
    rows: list
    slope: float


def _vary(base: RunConfig, variable: str, value: float) -> RunConfig:
    cfg = copy.deepcopy(base)
    if variable == "h":
        cfg.h = value
    elif variable == "tau":
        cfg.tau = value
    else:
        if value != int(value):
            raise ValueError("rank values must be integers")
        cfg.rank = int(value)
    return cfg


def loglog_slope(xs, ys) -> float:
    pts = [(x, y) for x, y in zip(xs, ys) if y is not None and x > 0 and y > 0 and math.isfinite(y)]
    if len(pts) < 2:
        return float("nan")
    lx = np.log([p[0] for p in pts])
    ly = np.log([p[1] for p in pts])
    return float(np.polyfit(lx, ly, 1)[0])


def sweep(scfg: SweepConfig, out_dir=None, write: bool = True) -> SweepResult:
    rows = []
    for value in scfg.values:
        res = execute(_vary(scfg.base, scfg.variable, value))
        rows.append({
            "value": value,
            "final_error": res.final_error,
            "final_rank": res.final_rank,
            "wall_ms": res.wall_time * 1e3,
        })
    slope = loglog_slope([r["value"] for r in rows], [r["final_error"] for r in rows])
    result = SweepResult(scfg, rows, slope)
    if write:
        out = Path(out_dir or scfg.output)
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "sweep.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["value", "final_error", "final_rank", "wall_ms"])
            for r in rows:
                w.writerow([fmt(r["value"]), fmt(r["final_error"]), rank_label(r["final_rank"]), "%.3f" % r["wall_ms"]])
        (out / "sweep_summary.txt").write_text(
            f"variable: {scfg.variable}\npoints: {len(rows)}\nloglog_slope: {fmt(slope)}\n"
        )
        svg = line_plot(
            [("final error", [r["value"] for r in rows], [r["final_error"] for r in rows])],
            title=f"{scfg.base.problem}: final error vs {scfg.variable}",
            xlabel=scfg.variable, ylabel="final error", logx=True, logy=True,
        )
        (out / "sweep.svg").write_text(svg)
    return result
