"""One rendering job per process.

    speechlevel-plots --kind attention --out weights.png alpha.csv wave.csv

Exit codes: 0 drawn, 1 bad usage or schema mismatch (the offending column
is named on stderr), 2 output exists without --force.
"""

import argparse
import sys

from .readers import SchemaError
from .render import FIGURE_KINDS, OutputExists, PlotJob, render


def build_parser():
    parser = argparse.ArgumentParser(
        prog="speechlevel-plots",
        description="render one figure from exported artifacts")
    parser.add_argument("inputs", nargs="+", help="artifact file(s)")
    parser.add_argument("--kind", required=True,
                        help="|".join(FIGURE_KINDS))
    parser.add_argument("--out", required=True, help="image path (.png/.svg)")
    parser.add_argument("--force", action="store_true",
                        help="replace an existing output file")
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    job = PlotJob(kind=args.kind, inputs=tuple(args.inputs), out=args.out,
                  force=args.force)
    try:
        out = render(job)
    except SchemaError as exc:
        print(f"ERROR: {exc}", file=sys.stderr)
        return 1
    except OutputExists as exc:
        print(f"ERROR: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {out}")
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
