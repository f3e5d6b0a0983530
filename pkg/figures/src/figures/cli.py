"""figures render --spec <file> --out <dir>"""

from __future__ import annotations

import argparse
import sys

from figures.spec import FigureSpec, SchemaError
from figures.render import render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="figures", description="render entbath outputs as SVG figures")
    sub = parser.add_subparsers(dest="command", required=True)
    p_render = sub.add_parser("render", help="render one figure spec")
    p_render.add_argument("--spec", required=True, help="figure spec JSON")
    p_render.add_argument("--out", required=True, help="output directory")
    args = parser.parse_args(argv)

    try:
        spec = FigureSpec.load(args.spec)
        written = render(spec, args.out)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    for path in written:
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
