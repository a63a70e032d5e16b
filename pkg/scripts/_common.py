"""Shared helpers for the experiment scripts."""

import argparse
from pathlib import Path

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def parser(description: str, default_out: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--out-dir", type=Path, default=Path("results") / default_out)
    p.add_argument("--configs", type=Path, default=CONFIGS)
    return p
