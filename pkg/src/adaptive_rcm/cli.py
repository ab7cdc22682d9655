"""Command-line front end: ``run``, ``verify`` and ``plot``."""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import logs, verify
from .config import ConfigError, load_scenario
from .simulation import ScenarioError, SimulationError, run_scenario

OUT_ENV = "ADAPTIVE_RCM_OUT"

EXIT_OK, EXIT_CONFIG, EXIT_SIM = 0, 1, 2


def _scenario_files(config: Path) -> list[Path]:
    if config.is_dir():
        return sorted(config.glob("*.toml"))
    return [config]


def run_one(config_path: Path, out_dir: Path, overrides: list[str], plots: bool) -> tuple[int, str]:
    """Run a single scenario file; returns (exit code, message)."""
    try:
        scenario = load_scenario(config_path, overrides)
    except ConfigError as exc:
        return EXIT_CONFIG, f"config error: {exc}"
    t0 = time.perf_counter()
    try:
        sim_log = run_scenario(scenario)
    except ScenarioError as exc:
        return EXIT_CONFIG, f"{scenario.name}: ill-posed scenario: {exc}"
    except SimulationError as exc:
        return EXIT_SIM, f"{scenario.name}: {exc}"
    runtime = time.perf_counter() - t0
    out_dir.mkdir(parents=True, exist_ok=True)
    csv_path = logs.write_csv(sim_log, out_dir / f"{scenario.name}.csv")
    summary = logs.summarize(sim_log, runtime)
    (out_dir / f"{scenario.name}.summary.json").write_text(summary.to_json() + "\n")
    if plots:
        from .plots import plot_log
        plot_log(sim_log, out_dir / scenario.name)
    return EXIT_OK, (f"{scenario.name}: {len(sim_log)} steps in {runtime:.1f} s, "
                     f"terminal e_rcm {summary.terminal_e_rcm * 1e3:.4f} mm, "
                     f"terminal |f_rcm| {summary.terminal_f_rcm:.4f} N -> {csv_path}")


def cmd_run(args) -> int:
    files = _scenario_files(Path(args.config))
    if not files:
        print(f"no scenario files under {args.config}", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = Path(args.out or os.environ.get(OUT_ENV, "results"))
    jobs = [(f, out_dir, list(args.set), args.plots) for f in files]
    if args.parallel > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.parallel) as pool:
            results = list(pool.map(run_one, *zip(*jobs)))
    else:
        results = [run_one(*job) for job in jobs]
    code = EXIT_OK
    for rc, msg in results:
        print(msg, file=sys.stderr if rc else sys.stdout)
        code = max(code, rc)
    return code


def cmd_verify(args) -> int:
    t0 = time.perf_counter()
    results = verify.run_checks(n=args.samples, seed=args.seed,
                                jacobian_perturbation=args.perturb_jacobian)
    print(verify.format_table(results))
    failed = [r.name for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed "
          f"in {time.perf_counter() - t0:.1f} s")
    if failed:
        print("failed: " + "; ".join(failed), file=sys.stderr)
        return 1
    return 0


def cmd_plot(args) -> int:
    try:
        sim_log = logs.read_csv(args.csv)
    except (logs.SchemaError, OSError) as exc:
        print(f"plot: {exc}", file=sys.stderr)
        return 1
    from .plots import plot_log
    out = args.out or str(Path(args.csv).with_suffix(""))
    for p in plot_log(sim_log, out):
        print(p)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adaptive-rcm",
                                     description="Adaptive RCM admittance control simulator")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="simulate one scenario file or a directory of them")
    p.add_argument("--config", required=True, help="scenario .toml file or directory")
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./results)")
    p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config value, e.g. gains.k_adm=0.2 (repeatable)")
    p.add_argument("--plots", action="store_true", help="also write PNG figures")
    p.add_argument("--parallel", type=int, default=1, metavar="N",
                   help="run up to N scenario files concurrently")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("verify", help="run the built-in numerical self-checks")
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--perturb-jacobian", type=float, default=0.0, help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("plot", help="write figures from a run CSV")
    p.add_argument("csv")
    p.add_argument("--out", help="output prefix (default: CSV path without extension)")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
