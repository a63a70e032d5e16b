"""Desk-scale cascade heatmaps for both regimes, with per-bin threshold magnitudes.

Writes <regime>/heatmap.csv and bin_thresholds.csv.
"""

import csv
import sys

from _common import parser

from opcascade.cascades import bin_threshold_magnitudes, read_heatmap_csv
from opcascade.cli import main


def run(argv=None) -> int:
    p = parser(__doc__.splitlines()[0], "heatmaps")
    p.add_argument("--threads", type=int, default=2)
    args = p.parse_args(argv)
    rows = []
    for regime, cfg in (("agreement", "sweep_agreement.cfg"), ("disagreement", "sweep_disagreement.cfg")):
        out = args.out_dir / regime
        code = main(["sweep", "--config", str(args.configs / cfg), "--out-dir", str(out),
                     "--threads", str(args.threads)])
        if code:
            return code
        grid = read_heatmap_csv(out / "heatmap.csv")
        for k, m in enumerate(bin_threshold_magnitudes(grid)):
            rows.append([regime, f"{grid.alignment_edges[k]:.17g}", f"{grid.alignment_edges[k + 1]:.17g}", f"{m:.17g}"])
    with open(args.out_dir / "bin_thresholds.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["regime", "alignment_bin_lo", "alignment_bin_hi", "threshold_magnitude"])
        w.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(run())
