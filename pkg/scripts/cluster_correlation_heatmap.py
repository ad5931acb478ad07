"""Steering correlation inside one cluster, swept over subsection counts.

For each requested L the scenario is re-resolved with the matching r,
the fullest cluster's pairwise orthogonality defects are written as
heatmap.csv under --out/L<value>/, and the mean off-diagonal defect is
printed. Finer subsection grids should show weaker correlation.

    python3 scripts/cluster_correlation_heatmap.py --out results/heatmap
"""

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from hapsim.config import load_config
from hapsim.harness import heatmap


def r_for_l(l_count: int, nbr: int) -> int:
    # invert the square-grid sizing: pick the r whose grid lands on L
    for r in range(1, nbr + 1):
        s = int(np.floor(np.sqrt(nbr / r) + 0.5))
        if s * s == l_count:
            return r
    raise SystemExit(f"no r in 1..{nbr} yields L={l_count}")


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--config", type=Path, default=None)
    ap.add_argument("--out", type=Path, required=True)
    ap.add_argument("--l-values", type=str, default="16,25,49")
    args = ap.parse_args()

    base = load_config(args.config)
    print("mean off-diagonal orthogonality defect of the fullest cluster")
    for l_count in (int(v) for v in args.l_values.split(",")):
        cfg = replace(base, r=r_for_l(l_count, base.nbr)).resolve()
        ids, matrix = heatmap(cfg, out_dir=args.out / f"L{l_count}")
        n = len(ids)
        if n < 2:
            print(f"  L={l_count:3d}  cluster has {n} user(s), no pairs")
            continue
        off = (matrix.sum() - np.trace(matrix)) / (n * (n - 1))
        print(f"  L={l_count:3d}  {n} users  mean defect {off:.4f}")
    print(f"wrote per-L heatmap.csv files under {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
