"""Command-line entry point: run, mismatch, bounds, verify, plot."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .config import ConfigError, load_config
from .harness import ReplicationError, evaluate_bounds, run_experiment, run_mismatch_sweep
from .output import dump_json, jsonable, write_outputs, write_sweep_outputs
from .plotting import render_svg
from .verify import SUITES, verify

log = logging.getLogger("esbandit")

EXIT_OK, EXIT_FAILED, EXIT_CONFIG = 0, 1, 2


def _svg_path(cfg) -> Path:
    return cfg.output_path("svg")


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    result = run_experiment(cfg, args.workers)
    csv_path, json_path = cfg.output_path("csv"), cfg.output_path("json")
    write_outputs(result, csv_path, json_path)
    columns = ["mean_cum_regret"] + (["regret_bound"] if cfg.agent != "uniform" else [])
    render_svg(csv_path, _svg_path(cfg), columns, title=f"{cfg.agent} cumulative regret")
    log.info("wrote %s, %s, %s", csv_path, json_path, _svg_path(cfg))
    print(json.dumps(jsonable(result.report.extras), sort_keys=True))
    return EXIT_OK


def cmd_mismatch(args) -> int:
    cfg = load_config(args.config)
    results = run_mismatch_sweep(cfg, args.workers)
    csv_path, json_path = cfg.output_path("csv"), cfg.output_path("json")
    write_sweep_outputs(results, csv_path, json_path)
    columns = [f"hellinger_mismatch_M{M}" for M in results]
    render_svg(csv_path, _svg_path(cfg), columns, title="Hellinger mismatch by ensemble size")
    log.info("wrote %s, %s, %s", csv_path, json_path, _svg_path(cfg))
    for M, res in results.items():
        print(f"M={M} final_mean_cum_regret={res.report.extras['final_mean_cum_regret']:.6g} "
              f"mean_hellinger={res.report.extras.get('mean_hellinger_mismatch', float('nan')):.6g}")
    return EXIT_OK


def cmd_bounds(args) -> int:
    cfg = load_config(args.config)
    report = evaluate_bounds(cfg)
    payload = report.to_dict()
    dump_json(payload, cfg.output_path("json"))
    print(json.dumps(jsonable({k: payload[k] for k in (
        "iota", "kappa", "eta_hat", "eta_se", "entropy_opt_hat", "entropy_se", "theorem1_value")}), sort_keys=True))
    return EXIT_OK


def cmd_verify(args) -> int:
    try:
        checks = verify(args.suite, seed=args.seed, scale=args.scale)
    except KeyError as exc:
        print(exc.args[0], file=sys.stderr)
        return EXIT_CONFIG
    for c in checks:
        status = "PASS" if c.passed else "FAIL"
        print(f"{status}  {c.suite:18s} {c.invariant}: measured={c.measured:.6g} bound={c.bound:.6g}"
              + (f"  ({c.detail})" if c.detail else ""))
    if args.report:
        dump_json([c.to_dict() for c in checks], Path(args.report))
    return EXIT_OK if all(c.passed for c in checks) else EXIT_FAILED


def cmd_plot(args) -> int:
    try:
        render_svg(args.csv, args.svg, args.columns, title=args.title, logy=args.logy)
    except (OSError, ValueError) as exc:
        print(f"plot error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="esbandit", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, func, help_text in (
        ("run", cmd_run, "regret experiment"),
        ("mismatch", cmd_mismatch, "per-step divergence sweep over ensemble_sizes"),
        ("bounds", cmd_bounds, "emit the bound report as JSON"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("config", help="TOML/JSON config file or an inline JSON object")
        if name != "bounds":
            p.add_argument("--workers", type=int, default=None, help="process count (default: config value)")
        p.set_defaults(func=func)

    p = sub.add_parser("verify", help="run a property suite")
    p.add_argument("suite", help=f"one of {', '.join(SUITES)} or 'all'")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--scale", type=float, default=1.0, help="Monte Carlo size multiplier")
    p.add_argument("--report", help="write the checks as JSON here")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("plot", help="render CSV columns to an SVG line chart")
    p.add_argument("csv")
    p.add_argument("svg")
    p.add_argument("--columns", nargs="+", default=None)
    p.add_argument("--title", default=None)
    p.add_argument("--logy", action="store_true")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ReplicationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILED


if __name__ == "__main__":
    sys.exit(main())
