"""Command line front end: one CSV in, one image out."""

from __future__ import annotations

import argparse
import sys

from .render import FAMILIES, PlotSpec, SchemaError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="arismec-plot",
        description="Render a figure family from an experiments CSV.")
    parser.add_argument("--family", required=True, choices=sorted(FAMILIES))
    parser.add_argument("--in", dest="input", required=True, metavar="CSV")
    parser.add_argument("--out", dest="output", required=True, metavar="IMAGE")
    parser.add_argument("--dpi", type=int, default=150)
    parser.add_argument("--title")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    spec = PlotSpec(input_path=args.input, family=args.family,
                    output_path=args.output, dpi=args.dpi, title=args.title)
    try:
        render(spec)
    except (OSError, SchemaError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
