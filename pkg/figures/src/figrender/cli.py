"""figrender command line: render <figure_id> --data DIR --out FILE."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Optional, Sequence

from .render import RenderError, render
from .specs import FIGURE_SPECS


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = argparse.ArgumentParser(
        prog="figrender",
        description="Render uscdeph sweep CSVs into static vector figures",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p_render = sub.add_parser("render", help="render one figure")
    p_render.add_argument("figure_id", choices=sorted(FIGURE_SPECS))
    p_render.add_argument("--data", required=True, help="directory with sweep CSVs")
    p_render.add_argument("--out", required=True, help="output image path (.pdf/.svg)")

    args = parser.parse_args(argv)
    try:
        out = render(args.figure_id, Path(args.data), Path(args.out))
    except RenderError as err:
        print(f"error: {err}", file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
