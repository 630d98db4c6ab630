"""Run every shipped config through the ``lssvar`` CLI and write CSVs to an output directory.

    python3 scripts/run_experiments.py [--out results] [--only regime_i regime_iii]
"""

import argparse
import sys
import time
from pathlib import Path

from lssvar.cli import main as lssvar_main

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", default="results", help="output directory")
    parser.add_argument("--only", nargs="*", help="config stems to run (default: all)")
    args = parser.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    status = 0
    for conf in sorted(CONFIGS.glob("*.conf")):
        if args.only and conf.stem not in args.only:
            continue
        command = "oracle" if conf.stem == "oracle" else "verify"
        start = time.perf_counter()
        code = lssvar_main([command, "--config", str(conf), "--out", str(out / f"{conf.stem}.csv")])
        print(f"{conf.stem:16s} exit {code}  {time.perf_counter() - start:7.1f}s", flush=True)
        status = status or code
    return status


if __name__ == "__main__":
    sys.exit(main())
