"""Command line entry point.

Flags mirror the PlotJob fields: ``--input-dir``, ``--kind``, ``--fields``,
``--output``.
"""

from __future__ import annotations

import argparse
import sys

from .plots import KINDS, PlotJob, make_plot


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="postproc-plot",
        description="render a static figure from a solver run directory")
    parser.add_argument("--input-dir", required=True,
                        help="run directory with the solver's CSV outputs")
    parser.add_argument("--kind", required=True, choices=KINDS,
                        help="plot kind")
    parser.add_argument("--fields", default="",
                        help="comma-separated selection (snapshot fields, "
                             "modes, or fraction columns; default per kind)")
    parser.add_argument("--output", required=True,
                        help="output image path")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    fields = tuple(s.strip() for s in args.fields.split(",") if s.strip())
    try:
        job = PlotJob(input_dir=args.input_dir, kind=args.kind,
                      fields=fields, output=args.output)
        result = make_plot(job)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(result.path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
