"""Mean sum rate versus transmit power for every blocks-per-user setting.

Runs the seeded power sweep at the configured bandwidth, writes
sweep_power.csv / meta.txt into --out, and prints the configuration
ranking at each power point.

    python3 scripts/sum_rate_vs_power.py --out results/power10
    python3 scripts/sum_rate_vs_power.py --out results/power20 --bandwidth 20e6 --trials 200
"""

import argparse
import sys
from collections import defaultdict
from dataclasses import replace
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from hapsim.cli import DEFAULT_POWERS_DBM
from hapsim.config import load_config
from hapsim.harness import sweep_power


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", type=Path, default=None)
    ap.add_argument("--out", type=Path, required=True)
    ap.add_argument("--bandwidth", type=float, default=None)
    ap.add_argument("--trials", type=int, default=None)
    ap.add_argument("--powers-dbm", type=str, default=None,
                    help="comma separated, default 30..50 step 2")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    cfg = load_config(args.config)
    overrides = {}
    if args.bandwidth is not None:
        overrides["bandwidth"] = args.bandwidth
    if args.trials is not None:
        overrides["trials"] = args.trials
    if overrides:
        cfg = replace(cfg, **overrides).resolve()
    powers = (DEFAULT_POWERS_DBM if args.powers_dbm is None
              else tuple(float(p) for p in args.powers_dbm.split(",")))

    rows = sweep_power(cfg, powers, out_dir=args.out, workers=args.workers)

    by_power = defaultdict(list)
    for row in rows:
        by_power[row["p_max_dbm"]].append(row)
    print(f"bandwidth {cfg.bandwidth / 1e6:g} MHz, {cfg.trials} trials per point")
    for p in sorted(by_power):
        ranked = sorted(by_power[p], key=lambda r: -r["mean_sum_rate_bps"])
        order = "  ".join(
            f"(L={r['L']},r={r['r']}) {r['mean_sum_rate_bps'] / 1e6:8.2f}"
            for r in ranked
        )
        print(f"  {p:5.1f} dBm  {order}  [Mbit/s]")
    print(f"wrote {args.out}/sweep_power.csv")
    return 0


if __name__ == "__main__":
    sys.exit(main())
