"""Command line front end: `figures <kind> --in result.csv --out fig.png`."""

from __future__ import annotations

import argparse
import sys

from .core import RENDERERS, FigureSpec


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="figures",
        description="Render figures from slowmix result files.")
    parser.add_argument("kind", choices=sorted(RENDERERS),
                        help="figure kind")
    parser.add_argument("--in", dest="inputs", action="append", required=True,
                        metavar="CSV", help="input result.csv (repeatable)")
    parser.add_argument("--out", required=True, metavar="IMG",
                        help="output image path")
    parser.add_argument("--ref-slope", type=float, default=None,
                        help="dashed reference line slope (log-log plots)")
    parser.add_argument("--json", dest="result_json", default=None,
                        metavar="JSON",
                        help="result.json to carry annotations from")
    parser.add_argument("--cols", default=None, metavar="A,B",
                        help="sample columns for distribution-compare")
    parser.add_argument("--title", default="")
    parser.add_argument("--xlabel", default="")
    parser.add_argument("--ylabel", default="")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    columns = tuple(args.cols.split(",")) if args.cols else ()
    try:
        spec = FigureSpec(tuple(args.inputs), args.kind, args.out,
                          args.ref_slope, args.result_json, args.title,
                          args.xlabel, args.ylabel, columns)
        info = RENDERERS[args.kind](spec)
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    parts = ", ".join(f"{k}={v}" for k, v in info.items())
    print(f"wrote {args.out} ({parts})")
    return 0


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
