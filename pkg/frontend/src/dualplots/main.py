"""Command line entry point: ``plots <figure-id> <csv...> -o <dir>``."""

from __future__ import annotations

import argparse
import sys

from .recipes import RECIPES, RecipeError, render


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plots",
        description="Render publication figures from dualctl result CSVs.",
    )
    parser.add_argument(
        "figure",
        help="figure id (%s) or 'all'" % ", ".join(sorted(RECIPES)),
    )
    parser.add_argument("csv", nargs="+", help="input result CSV files")
    parser.add_argument("-o", "--out-dir", default=".",
                        help="output directory (default: current directory)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    ids = sorted(RECIPES) if args.figure == "all" else [args.figure]
    status = 0
    for figure_id in ids:
        try:
            out = render(figure_id, args.csv, args.out_dir)
        except (RecipeError, OSError) as exc:
            print(f"error: {figure_id}: {exc}", file=sys.stderr)
            if args.figure != "all":
                return 2
            status = 2
            continue
        print(out)
    return status


if __name__ == "__main__":
    raise SystemExit(main())
