"""Command line entry point: ``dlr run|sweep|check``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from ..structure import ConfigError
from .config import load_run_config, load_sweep_config
from .runner import RunError, fmt, run, sweep
from .suites import SUITES, run_suite

EXIT_CONFIG = 2
EXIT_RUN = 3


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dlr", description="Rank-adaptive dynamical low-rank experiments.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="integrate one configuration")
    r.add_argument("config")
    r.add_argument("--out", help="output directory (overrides the config)")

    s = sub.add_parser("sweep", help="run a parameter sweep")
    s.add_argument("config")
    s.add_argument("--out", help="output directory (overrides the config)")

    c = sub.add_parser("check", help="run an invariant suite and print a JSON report")
    c.add_argument("suite", choices=sorted(SUITES))
    c.add_argument("--out", help="also write the report to this directory")
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    try:
        if args.command == "run":
            cfg = load_run_config(args.config)
            res = run(cfg, args.out)
            err = res.final_error
            print(f"{len(res.rows)} steps, final rank {res.final_rank}, "
                  f"final error {fmt(err) if err is not None else 'n/a'}, {res.wall_time:.2f} s")
            return 0
        if args.command == "sweep":
            scfg = load_sweep_config(args.config)
            res = sweep(scfg, args.out)
            for row in res.rows:
                print(f"{scfg.variable}={row['value']:.6g}  error={row['final_error']}  rank={row['final_rank']}")
            print(f"loglog slope: {res.slope:.4f}")
            return 0
        criteria = run_suite(args.suite)
        report = {
            "suite": args.suite,
            "passed": all(c.passed for c in criteria),
            "criteria": [c.to_dict() for c in criteria],
        }
        text = json.dumps(report, indent=2)
        print(text)
        if args.out:
            out = Path(args.out)
            out.mkdir(parents=True, exist_ok=True)
            (out / f"check_{args.suite}.json").write_text(text + "\n")
        return 0 if report["passed"] else 1
    except ConfigError as exc:
        msg = str(exc)
        source = getattr(args, "config", None)
        if source and not msg.startswith(source):
            msg = f"{source}: {msg}"
        print(f"config error:\n{msg}", file=sys.stderr)
        return EXIT_CONFIG
    except RunError as exc:
        print(f"run failed: {exc}", file=sys.stderr)
        return EXIT_RUN


if __name__ == "__main__":
    sys.exit(main())
