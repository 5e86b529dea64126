"""render-figure: turn a beamrate figure CSV into a static image."""

import argparse
import sys

from plotview.render import FIGURE_IDS, SchemaError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="render-figure",
        description="Render a beamrate figure CSV to an image.")
    parser.add_argument("--id", dest="figure_id", required=True,
                        help=f"figure id ({', '.join(FIGURE_IDS)})")
    parser.add_argument("--in", dest="csv_path", required=True,
                        help="input CSV (as written by `beamrate figure`)")
    parser.add_argument("--out", dest="out_path", required=True,
                        help="output image path (e.g. fig4.png)")
    args = parser.parse_args(argv)
    try:
        path = render(args.figure_id, args.csv_path, args.out_path)
    except SchemaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
