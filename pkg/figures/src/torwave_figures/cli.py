"""Command line for the figure scripts: heatmaps and norm curves."""

from __future__ import annotations

import argparse
import sys

from .archive import ArchiveFormatError, read_archive
from .render import CsvFormatError, render_heatmaps, render_norms


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="torwave-figures",
        description="Render heatmaps and norm curves from torwave output files",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="heatmaps from a snapshot archive")
    p.add_argument("--snapshots", required=True, help="path to snapshots.bin")
    p.add_argument("--out", required=True, help="output directory for images")
    p.add_argument("--global-norm", action="store_true", dest="global_norm",
                   help="share one color scale across snapshots")

    p = sub.add_parser("norms", help="norm-vs-time curves from CSV files")
    p.add_argument("--csv", required=True, nargs="+", help="one or more norms.csv paths")
    p.add_argument("--labels", required=True, nargs="+", help="one label per CSV")
    p.add_argument("--out", required=True, help="output image path")
    p.add_argument("--column", default="L2", help="norm column to plot (default L2)")
    p.add_argument("--log", action="store_true", help="logarithmic norm axis")

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "render":
            archive = read_archive(args.snapshots)
            written = render_heatmaps(archive, args.out, global_norm=args.global_norm)
            print(f"wrote {len(written)} images to {args.out}")
        else:
            out = render_norms(args.csv, args.labels, args.out, column=args.column,
                               log_scale=args.log)
            print(f"wrote {out}")
    except (ArchiveFormatError, CsvFormatError, ValueError, FileNotFoundError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
