"""Cascade threshold against input alignment, with the coupled input-scale branch.

Writes branch_input.csv (continuation at the configured alignment) and
threshold_vs_alignment.csv (bisected threshold and continuation fold per alignment).
"""

import csv
import sys

import numpy as np

from _common import parser

from opcascade.cli import main
from opcascade.config import load_config
from opcascade.continuation import input_direction
from opcascade.graphs import centrality, compute_spectrum, extreme_eigenpairs
from opcascade.threshold import ThresholdError, find_cascade_threshold, fold_threshold


def run(argv=None) -> int:
    p = parser(__doc__.splitlines()[0], "threshold")
    p.add_argument("--points", type=int, default=10, help="alignments in linspace(0.1, 1, points)")
    args = p.parse_args(argv)
    cfg_path = args.configs / "threshold.cfg"
    code = main(["bifurcate", "--config", str(cfg_path), "--out-dir", str(args.out_dir)])
    if code:
        return code

    cfg = load_config(cfg_path)
    g = cfg.graph()
    params, ap, crit = cfg.base_params(), cfg.attention_params(g), cfg.criteria()
    s = compute_spectrum(g)
    v_c = centrality(s, "agreement").entries
    agree, _ = extreme_eigenpairs(s)
    v_perp = np.real(s.right_eigenvectors[agree.index + 1])
    bracket_hi = 0.5
    with open(args.out_dir / "threshold_vs_alignment.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["alignment", "threshold", "bracket_lo", "fold"])
        for a in np.linspace(0.1, 1.0, args.points):
            d = input_direction(v_c, a, v_perp)
            res = find_cascade_threshold(g, params, ap, d, bracket_hi, crit)
            try:
                fold = fold_threshold(g, params, ap, d, bracket_hi, v_c)
            except (ThresholdError, ArithmeticError):
                fold = float("nan")
            w.writerow([f"{a:.17g}", f"{res.threshold_p:.17g}", f"{res.bracket[0]:.17g}", f"{fold:.17g}"])
            print(f"alignment {a:.2f}: threshold {res.threshold_p:.6g} fold {fold:.6g}")
    return 0


if __name__ == "__main__":
    sys.exit(run())
