"""Per-user rate distribution for each blocks-per-user setting.

Writes the raw per-user samples (sweep_rb.csv) and prints rate deciles
per r so the distribution shift is visible without plotting.

    python3 scripts/rate_cdf_by_rb.py --out results/cdf10
    python3 scripts/rate_cdf_by_rb.py --out results/cdf20 --bandwidth 20e6
"""

import argparse
import sys
from collections import defaultdict
from dataclasses import replace
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from hapsim.config import load_config
from hapsim.harness import figure_r_values, sweep_rb


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", type=Path, default=None)
    ap.add_argument("--out", type=Path, required=True)
    ap.add_argument("--bandwidth", type=float, default=None)
    ap.add_argument("--trials", type=int, default=None)
    ap.add_argument("--r", type=str, default=None,
                    help="comma separated r values, default set by bandwidth")
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
    r_values = (figure_r_values(cfg) if args.r is None
                else tuple(int(v) for v in args.r.split(",")))

    rows = sweep_rb(cfg, r_values, out_dir=args.out, workers=args.workers)

    samples = defaultdict(list)
    for row in rows:
        samples[(row["r"], row["L"])].append(row["rate_bps"])
    qs = np.arange(0.1, 1.0, 0.1)
    print(f"bandwidth {cfg.bandwidth / 1e6:g} MHz, {cfg.trials} trials, "
          "per-user rate deciles [Mbit/s]")
    for (r, l_count), vals in sorted(samples.items()):
        deciles = np.quantile(np.asarray(vals) / 1e6, qs)
        body = " ".join(f"{d:7.3f}" for d in deciles)
        print(f"  r={r} L={l_count} n={len(vals):5d}  {body}")
    print(f"wrote {args.out}/sweep_rb.csv")
    return 0


if __name__ == "__main__":
    sys.exit(main())
