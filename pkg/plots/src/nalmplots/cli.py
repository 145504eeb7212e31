"""Script entry points: render metrics panels or a 3-D surface image."""

from __future__ import annotations

import argparse
import sys

from .figures import FigureJob, SchemaError, render


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="nalm-plots",
        description="render figures from nalmlab CSV outputs",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    m = sub.add_parser("metrics", help="per-range success/speed/sparsity panels")
    m.add_argument("--summary", required=True, help="summary.csv from a sweep")
    m.add_argument("--out", required=True, help="output image path")
    s = sub.add_parser("surface", help="3-D RMSE surface from a grid CSV")
    s.add_argument("--grid", required=True, help="surface CSV (w1,w2,rmse)")
    s.add_argument("--out", required=True, help="output image path")
    args = parser.parse_args(argv)

    if args.command == "metrics":
        job = FigureJob(args.summary, "metrics_panels", args.out)
    else:
        job = FigureJob(args.grid, "surface3d", args.out)
    try:
        render(job)
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
