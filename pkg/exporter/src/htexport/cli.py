"""Command line: htexport export --checkpoint <path> --layer <glob> --out <dir>."""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ExportError
from .export import export


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="htexport", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("export", help="export dense layers into a weight archive")
    p.add_argument("--checkpoint", required=True, help="torch checkpoint or .npz file")
    p.add_argument("--layer", required=True, help="glob over tensor names, e.g. '*weight*'")
    p.add_argument("--out", required=True, help="archive directory to write")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        result = export(args.checkpoint, args.layer, args.out)
    except ExportError as exc:
        print(
            json.dumps({"error": {"type": type(exc).__name__, "message": str(exc)}}),
            file=sys.stderr,
        )
        return 1
    for notice in result.skipped:
        print(f"notice: {notice}", file=sys.stderr)
    print(
        json.dumps(
            {
                "model": result.model_name,
                "layers": list(result.layer_names),
                "manifest": str(result.path),
                "skipped": len(result.skipped),
            },
            indent=2,
            sort_keys=True,
        )
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
