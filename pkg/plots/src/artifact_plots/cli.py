"""Command line for rendering experiment CSVs into figures.

Usage: ``plot <kind> <in.csv> <out.png>`` with kind one of
``variation-lines | rip-decay | phase-heatmap``.

Exit codes: 0 success; 1 usage, missing-file, or schema errors;
2 rendering failures.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import KINDS, PlotJob, SchemaError, render


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="plot", description=__doc__.splitlines()[0])
    parser.add_argument("kind", choices=KINDS, help="plot kind")
    parser.add_argument("source", help="input CSV file")
    parser.add_argument("image", help="output image file")
    parser.add_argument(
        "--log-y", action="store_true", help="log-scale the value axis"
    )
    return parser


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        job = PlotJob(
            source=Path(args.source),
            kind=args.kind,
            image=Path(args.image),
            log_y=args.log_y,
        )
        render(job)
    except (_UsageError, SchemaError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # rendering backend failures
        print(f"render failed: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
