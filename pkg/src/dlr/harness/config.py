"""Run and sweep configuration: JSON files validated against a schema before any compute."""
from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema

from ..structure import KINDS, ConfigError

PROBLEMS = (
    "sec51",
    "transport",
    "burgers",
    "gradient_flow",
    "schroedinger",
    "hamiltonian",
    "synthetic_exactness",
    "custom-tucker",
)

_positive = {"type": "number", "exclusiveMinimum": 0}
_count = {"type": "integer", "minimum": 1}

RUN_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["problem", "integrator", "T"],
    "properties": {
        "problem": {"type": "string", "enum": list(PROBLEMS)},
        "params": {"type": "object"},
        "integrator": {"type": "string", "enum": ["adaptive", "fixed_rank"]},
        "rank": {"oneOf": [_count, {"type": "array", "items": _count, "minItems": 1, "maxItems": 8}]},
        "h": _positive,
        "cfl": _positive,
        "T": _positive,
        "substep": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "method": {"type": "string", "enum": ["rk1", "rk2", "rk4"]},
                "count": _count,
            },
        },
        "truncation": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "mode": {"type": "string", "enum": ["absolute", "relative"]},
                "tau": {"type": "number", "minimum": 0},
                "r_min": _count,
                "r_max": {"oneOf": [_count, {"type": "null"}]},
            },
        },
        "seed": {"type": "integer", "minimum": 0},
        "monitors": {"type": "array", "items": {"type": "string", "enum": list(KINDS)}},
        "output": {"type": "string"},
        "debug": {"type": "boolean"},
        "parallel": {"type": "boolean"},
        "plots": {"type": "boolean"},
    },
}

SWEEP_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["base", "variable", "values"],
    "properties": {
        "base": {"type": "object"},
        "variable": {"type": "string", "enum": ["h", "tau", "rank"]},
        "values": {"type": "array", "items": _positive, "minItems": 2},
        "output": {"type": "string"},
    },
}


@dataclass
class RunConfig:
    problem: str
    integrator: str
    T: float
    params: dict = field(default_factory=dict)
    rank: int | list | None = None
    h: float | None = None
    cfl: float | None = None
    method: str = "rk2"
    substeps: int = 1
    mode: str = "absolute"
    tau: float = 1e-6
    r_min: int = 1
    r_max: int | None = None
    seed: int = 0
    monitors: list = field(default_factory=list)
    output: str = "out"
    debug: bool = False
    parallel: bool = False
    plots: bool = True

    @classmethod
    def from_dict(cls, d: dict, source: str = "<config>", text: str | None = None) -> "RunConfig":
        _validate(d, RUN_SCHEMA, source, text)
        sub = d.get("substep", {})
        tr = d.get("truncation", {})
        cfg = cls(
            problem=d["problem"],
            integrator=d["integrator"],
            T=float(d["T"]),
            params=dict(d.get("params", {})),
            rank=d.get("rank"),
            h=d.get("h"),
            cfl=d.get("cfl"),
            method=sub.get("method", "rk2"),
            substeps=sub.get("count", 1),
            mode=tr.get("mode", "absolute"),
            tau=float(tr.get("tau", 1e-6)),
            r_min=tr.get("r_min", 1),
            r_max=tr.get("r_max"),
            seed=d.get("seed", 0),
            monitors=list(d.get("monitors", [])),
            output=d.get("output", "out"),
            debug=d.get("debug", False),
            parallel=d.get("parallel", False),
            plots=d.get("plots", True),
        )
        if cfg.r_max is not None and cfg.r_max < cfg.r_min:
            raise ConfigError(f"{source}: field 'truncation.r_max': must be >= r_min")
        for name in ("h", "cfl", "T", "tau"):
            v = getattr(cfg, name)
            if v is not None and not math.isfinite(v):
                raise ConfigError(f"{source}: field '{name}': must be finite")
        return cfg

    def to_dict(self) -> dict:
        d = {
            "problem": self.problem,
            "params": self.params,
            "integrator": self.integrator,
            "T": self.T,
            "substep": {"method": self.method, "count": self.substeps},
            "truncation": {"mode": self.mode, "tau": self.tau, "r_min": self.r_min, "r_max": self.r_max},
            "seed": self.seed,
            "monitors": self.monitors,
            "output": self.output,
            "debug": self.debug,
            "parallel": self.parallel,
            "plots": self.plots,
        }
        for key in ("rank", "h", "cfl"):
            if getattr(self, key) is not None:
                d[key] = getattr(self, key)
        return d


@dataclass
class SweepConfig:
    base: RunConfig
    variable: str
    values: list
    output: str = "sweep_out"

    @classmethod
    def from_dict(cls, d: dict, source: str = "<config>", text: str | None = None) -> "SweepConfig":
        _validate(d, SWEEP_SCHEMA, source, text)
        base = RunConfig.from_dict(d["base"], source, text)
        return cls(base, d["variable"], [float(v) for v in d["values"]], d.get("output", base.output))


def _locate(text: str | None, path) -> int | None:
    """Best-effort line number of the last key of ``path`` in the raw JSON text."""
    if not text:
        return None
    keys = [p for p in path if isinstance(p, str)]
    if not keys:
        return 1
    pat = re.compile(r'"%s"\s*:' % re.escape(keys[-1]))
    for lineno, line in enumerate(text.splitlines(), 1):
        if pat.search(line):
            return lineno
    return None


def _validate(d, schema, source, text):
    validator = jsonschema.Draft7Validator(schema)
    errors = sorted(validator.iter_errors(d), key=lambda e: list(e.absolute_path))
    if not errors:
        return
    lines = []
    for err in errors:
        path = list(err.absolute_path)
        where = ".".join(str(p) for p in path) or "<root>"
        lineno = _locate(text, path)
        loc = f"{source}:{lineno}" if lineno else source
        lines.append(f"{loc}: field '{where}': {err.message}")
    raise ConfigError("\n".join(lines))


def read_json(path) -> tuple[dict, str]:
    text = Path(path).read_text()
    try:
        return json.loads(text), text
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc


def load_run_config(path) -> RunConfig:
    d, text = read_json(path)
    return RunConfig.from_dict(d, str(path), text)


def load_sweep_config(path) -> SweepConfig:
    d, text = read_json(path)
    return SweepConfig.from_dict(d, str(path), text)
