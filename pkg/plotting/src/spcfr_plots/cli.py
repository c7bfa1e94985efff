"""Batch renderer: ``plot <trace.csv>... --out dir [--guides] [--title STR]``."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .render import Layout, render
from .traces import TraceFormatError, read_trace


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="plot", description=__doc__)
    parser.add_argument("traces", nargs="+", help="trace CSV files")
    parser.add_argument("--out", default="figures", help="output directory")
    parser.add_argument("--guides", action="store_true",
                        help="draw reference slopes -1/2 and -3/4")
    parser.add_argument("--title", default=None)
    args = parser.parse_args(argv)

    traces = []
    for path in args.traces:
        try:
            traces.append(read_trace(path))
        except TraceFormatError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
    panels = render(traces, Layout(out_dir=Path(args.out), title=args.title,
                                   guides=args.guides))
    for panel in panels:
        names = ", ".join(p.name for p in panel.paths)
        print(f"{panel.game}: {len(panel.labels)} series -> {names}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
