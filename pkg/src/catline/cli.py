"""Command-line entry point: ``catline run`` and ``catline plot``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .config import SCENARIOS, load_config
from .errors import ConfigError, NumericalFailure
from .plot import MalformedCsv, emit_plot
from .scenarios import EXIT_CONFIG, EXIT_NUMERICAL, run_scenario, with_overrides

log = logging.getLogger("catline")


def _out_root(args_out: str | None, cfg_out: str) -> Path:
    if args_out:
        return Path(args_out)
    if cfg_out:
        return Path(cfg_out)
    return Path(os.environ.get("CATLINE_OUT") or "out")


def _run_one(scenario: str, config: str, out: str | None, dim, seed, collisions, subdir: bool) -> int:
    try:
        cfg = load_config(config, scenario)
        cfg = with_overrides(cfg, dim=dim, seed=seed, collisions=collisions)
        root = _out_root(out, cfg.run.out_dir)
        if subdir:
            root = root / Path(config).stem
        result = run_scenario(cfg, root)
    except ConfigError as err:
        print(f"catline: config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalFailure as err:
        print(f"catline: numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL
    print(result.csv_path)
    for k, v in result.summary.items():
        print(f"  {k} = {v}")
    return result.exit_code


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="catline", description=__doc__)
    p.add_argument("--version", action="version", version=f"catline {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run a scenario from a config file")
    r.add_argument("scenario", choices=SCENARIOS)
    r.add_argument("--config", action="append", required=True,
                   help="config file; repeat to sweep several configs")
    r.add_argument("--out", help="output directory (default: $CATLINE_OUT or ./out)")
    r.add_argument("--dim", type=int, help="override the Fock truncation")
    r.add_argument("--seed", type=int, help="override the seed")
    r.add_argument("--collisions", type=int, help="override the number of collisions")
    r.add_argument("--jobs", type=int, default=1,
                   help="worker processes for a multi-config sweep")

    q = sub.add_parser("plot", help="render a CSV trace as SVG")
    q.add_argument("csv")
    q.add_argument("--out", required=True)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "plot":
        try:
            print(emit_plot(args.csv, args.out))
        except MalformedCsv as err:
            print(f"catline: {err}", file=sys.stderr)
            return EXIT_CONFIG
        return 0

    configs = args.config
    sweep = len(configs) > 1
    jobs = [(args.scenario, c, args.out, args.dim, args.seed, args.collisions, sweep) for c in configs]
    if sweep and args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            codes = list(pool.map(_run_one, *zip(*jobs)))
    else:
        codes = [_run_one(*j) for j in jobs]
    return max(codes)


if __name__ == "__main__":
    sys.exit(main())
