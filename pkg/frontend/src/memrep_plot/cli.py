"""Command line: memrep-plot <kind> <csv...> -o <image> [--ref E] [--xlabel ...]."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import FIGURE_KINDS, PlotJob, SchemaError, render


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="memrep-plot",
                                     description="render memrep CSV artifacts")
    parser.add_argument("kind", choices=FIGURE_KINDS)
    parser.add_argument("csv", nargs="+", type=Path)
    parser.add_argument("-o", "--output", required=True, type=Path)
    parser.add_argument("--ref", type=float, default=None,
                        help="horizontal reference line (e.g. the equalizer)")
    parser.add_argument("--xlabel", default="")
    parser.add_argument("--ylabel", default="")
    args = parser.parse_args(argv)
    try:
        job = PlotJob(inputs=tuple(args.csv), kind=args.kind, output=args.output,
                      xlabel=args.xlabel, ylabel=args.ylabel, reference=args.ref)
        path = render(job)
    except SchemaError as exc:
        print(f"memrep-plot-error: {exc}", file=sys.stderr)
        return 1
    print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
