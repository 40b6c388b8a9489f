"""Command line wrapper: plotkit {phase|scatter} --in data.csv --out figure.png."""

from __future__ import annotations

import argparse
import sys

from . import __version__
from .render import PlotSpec, render_phase, render_scatter


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="plotkit", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="kind", required=True)
    for kind in ("phase", "scatter"):
        cmd = sub.add_parser(kind)
        cmd.add_argument("--in", dest="input_csv", required=True)
        cmd.add_argument("--out", dest="output_path", required=True)
        cmd.add_argument("--tol", type=float, default=0.05)
        cmd.add_argument("--dpi", type=int, default=150)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    spec = PlotSpec(
        input_csv=args.input_csv,
        output_path=args.output_path,
        kind=args.kind,
        tol=args.tol,
        dpi=args.dpi,
    )
    try:
        if args.kind == "phase":
            render_phase(spec)
        else:
            render_scatter(spec)
    except (FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    raise SystemExit(main())
