"""Fixed-attention bifurcation diagrams on P3 for an orthogonal and an aligned input.

Writes branch CSVs and event summaries under <out-dir>/{orthogonal,aligned}.
"""

import sys

from _common import parser

from opcascade.cli import main


def run(argv=None) -> int:
    args = parser(__doc__.splitlines()[0], "pitchfork").parse_args(argv)
    for name, cfg in (("orthogonal", "pitchfork_orthogonal.cfg"), ("aligned", "pitchfork_aligned.cfg")):
        code = main(["bifurcate", "--config", str(args.configs / cfg), "--out-dir", str(args.out_dir / name)])
        if code:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(run())
