"""Command line front end.

    hapsim run         --out results/
    hapsim sweep-power --out results/ --powers-dbm 30,32,...,50
    hapsim sweep-rb    --out results/ --r 1,2,3
    hapsim heatmap     --out results/

Each subcommand writes <name>.csv plus meta.txt (resolved config and its
fingerprint) into --out. Reruns with the same config are byte-identical.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from . import harness
from .config import ConfigError, ScenarioConfig, load_config

DEFAULT_POWERS_DBM = tuple(float(p) for p in range(30, 51, 2))


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, default=None,
                   help="key=value config file (defaults used when omitted)")
    p.add_argument("--out", type=Path, required=True,
                   help="output directory for the CSV and meta.txt")
    p.add_argument("--seed", type=int, default=None,
                   help="override the master seed")
    p.add_argument("--trials", type=int, default=None,
                   help="override the trial count")
    p.add_argument("--workers", type=int, default=1,
                   help="process count for trial parallelism")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hapsim",
        description="System simulator for a sectorized aerial massive MIMO "
                    "base station",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="per-user rate table over seeded trials")
    _add_common(p_run)

    p_sp = sub.add_parser("sweep-power",
                          help="mean sum rate vs transmit power per r")
    _add_common(p_sp)
    p_sp.add_argument("--powers-dbm", type=str, default=None,
                      help="comma separated power grid in dBm "
                           "(default 30..50 step 2)")

    p_srb = sub.add_parser("sweep-rb",
                           help="per-user rate samples per blocks-per-user r")
    _add_common(p_srb)
    p_srb.add_argument("--r", type=str, default=None,
                       help="comma separated r values (default set by "
                            "bandwidth)")

    p_hm = sub.add_parser("heatmap",
                          help="steering correlation matrix of the fullest "
                               "cluster")
    _add_common(p_hm)
    return parser


def _load(args: argparse.Namespace) -> ScenarioConfig:
    cfg = load_config(args.config)
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.trials is not None:
        overrides["trials"] = args.trials
    if overrides:
        cfg = replace(cfg, **overrides).resolve()
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load(args)
    except (ConfigError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out: Path = args.out
    if args.command == "run":
        harness.run(cfg, out_dir=out, workers=args.workers)
        name = "run"
    elif args.command == "sweep-power":
        if args.powers_dbm is not None:
            powers = tuple(float(x) for x in args.powers_dbm.split(","))
        else:
            powers = DEFAULT_POWERS_DBM
        harness.sweep_power(cfg, powers, out_dir=out, workers=args.workers)
        name = "sweep_power"
    elif args.command == "sweep-rb":
        r_values = None
        if args.r is not None:
            r_values = tuple(int(x) for x in args.r.split(","))
        harness.sweep_rb(cfg, r_values, out_dir=out, workers=args.workers)
        name = "sweep_rb"
    else:
        harness.heatmap(cfg, out_dir=out)
        name = "heatmap"
    print(f"wrote {out / (name + '.csv')}")
    print(f"wrote {out / 'meta.txt'}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
