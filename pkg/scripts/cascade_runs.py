"""Single cascade runs in the agreement and disagreement regimes.

Writes trajectory.csv and verdict.json under <out-dir>/{agreement,disagreement}.
"""

import sys

from _common import parser

from opcascade.cli import main


def run(argv=None) -> int:
    args = parser(__doc__.splitlines()[0], "cascades").parse_args(argv)
    for name, cfg in (("agreement", "cascade_agreement.cfg"), ("disagreement", "cascade_disagreement.cfg")):
        code = main(["simulate", "--config", str(args.configs / cfg), "--out-dir", str(args.out_dir / name)])
        if code:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(run())
