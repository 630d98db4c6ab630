"""Command line entry point: simulate, powervar, estimate, verify, oracle."""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

import numpy as np

from .errors import ConfigInvalid, LSSError
from .estimators import PGrid, estimate_from_values
from .harness import (CONFIG_KEYS, derive_seed, load_config, run_estimate, run_oracle,
                      run_verify)
from .levy_driver import simulate_compound_poisson
from .limit_oracles import write_oracle_csv
from .lss_sim import SimConfig, burnin_truncation, read_path_csv, simulate_lss_cp, simulate_lss_stable
from .power_variation import power_variation, regime_classify
from .volatility import simulate_sigma

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _config_help() -> str:
    width = max(len(k) for k in CONFIG_KEYS)
    lines = ["config file keys (one 'key = value' per line, '#' comments):"]
    lines += [f"  {k.ljust(width)}  {v}" for k, v in CONFIG_KEYS.items()]
    return "\n".join(lines)


def _open_out(path):
    return sys.stdout if path in (None, "-") else open(path, "w")


def _close(fh):
    if fh is not sys.stdout:
        fh.close()


def cmd_simulate(args) -> int:
    cfg = load_config(args.config)
    n = args.n or cfg.n_list[0]
    rep = args.replication
    kernel = cfg.kernel
    sigma_rng = np.random.default_rng(derive_seed(cfg.master_seed, rep, "sigma"))
    driver_seed = derive_seed(cfg.master_seed, rep, "driver")
    if cfg.driver.kind == "compound_poisson":
        burn = burnin_truncation(kernel, cfg.theta, cfg.tail_tol, cfg.t_max, 1.0 / n)
        sigma = simulate_sigma(cfg.sigma, -burn, cfg.t_max, 1.0 / n, sigma_rng)
        driver = simulate_compound_poisson(cfg.driver, -burn, cfg.t_max, np.random.default_rng(driver_seed))
        path = simulate_lss_cp(kernel, sigma, driver, np.arange(int(round(cfg.t_max * n)) + 1) / n,
                               seed=driver_seed)
    else:
        sim = SimConfig(n, cfg.t_max, None, cfg.fine_factor, cfg.tail_tol, cfg.fine_past)
        burn = sim.resolve_burn_in(kernel, cfg.driver.beta)
        sigma = simulate_sigma(cfg.sigma, -burn, cfg.t_max, 1.0 / n, sigma_rng)
        path = simulate_lss_stable(kernel, sigma, cfg.driver.beta, cfg.driver.gamma_scale, sim,
                                   np.random.default_rng([driver_seed, n]), seed=driver_seed)
    fh = _open_out(args.out)
    path.write_csv(fh)
    _close(fh)
    return EXIT_OK


def cmd_powervar(args) -> int:
    with open(args.input) as fh:
        path = read_path_csv(fh)
    series = power_variation(path, args.p, args.k)
    if args.alpha is not None and args.beta is not None:
        tag = regime_classify(args.alpha, args.beta, args.p, args.k)
        series = series.with_normalization(tag, args.alpha, args.beta)
    fh = _open_out(args.out)
    series.write_csv(fh)
    _close(fh)
    return EXIT_OK


def cmd_estimate(args) -> int:
    with open(args.input) as fh:
        path = read_path_csv(fh)
    pgrid = PGrid(tuple(float(x) for x in args.pgrid.split(","))) if args.pgrid else PGrid()
    report = estimate_from_values(path.values, path.n, pgrid, None, args.p_ratio, args.ri_t, args.ri_p)
    fh = _open_out(args.out)
    report.write_csv(fh)
    _close(fh)
    print(report.summary(), file=sys.stderr if args.out in (None, "-") else sys.stdout)
    return EXIT_OK


def cmd_verify(args) -> int:
    cfg = load_config(args.config)
    if args.workers:
        cfg = replace(cfg, workers=args.workers)
    report = run_estimate(cfg) if cfg.mode == "estimate" else run_verify(cfg)
    fh = _open_out(args.out)
    report.write_csv(fh, timestamp=not args.no_timestamp)
    _close(fh)
    return EXIT_OK


def cmd_oracle(args) -> int:
    cfg = load_config(args.config)
    fh = _open_out(args.out)
    write_oracle_csv(run_oracle(cfg), fh)
    _close(fh)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lssvar", description="Simulation and power variation toolkit for LSS processes.",
        epilog=_config_help(), formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate one path and write it as CSV",
                       epilog=_config_help(), formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--config", required=True)
    p.add_argument("--n", type=int, help="observations per unit time (default: first of n_list)")
    p.add_argument("--replication", type=int, default=0, help="replication index for the seed")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("powervar", help="power variation of a path CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--alpha", type=float, help="with --beta: attach the regime normalisation")
    p.add_argument("--beta", type=float)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_powervar)

    p = sub.add_parser("estimate", help="estimate (alpha, beta), H and RI from a path CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--pgrid", help="comma-separated powers")
    p.add_argument("--p-ratio", type=float, default=0.5)
    p.add_argument("--ri-t", type=float, default=0.5)
    p.add_argument("--ri-p", type=float, default=1.0)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("verify", help="run a Monte Carlo experiment from a config file",
                       epilog=_config_help(), formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--config", required=True)
    p.add_argument("--workers", type=int, help="override the worker count")
    p.add_argument("--no-timestamp", action="store_true", help="omit the timestamp header line")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("oracle", help="limit constants for a config file",
                       epilog=_config_help(), formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--config", required=True)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_oracle)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigInvalid, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (LSSError, ArithmeticError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    raise SystemExit(main())
