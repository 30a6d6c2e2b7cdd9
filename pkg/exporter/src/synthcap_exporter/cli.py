"""Command line entry point: run an export job from a manifest file."""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ExportError
from .export import run_export
from .manifest import load_manifest


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="synthcap-export",
        description="Encode a caption corpus into aligned text features, "
        "generated-image features, and a tag-augmented corpus.",
    )
    parser.add_argument("--manifest", required=True, help="export manifest JSON file")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        manifest = load_manifest(args.manifest)
        report = run_export(manifest)
    except ExportError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(
        json.dumps(
            {
                "total": report.total,
                "failed": report.failed,
                "out_text": report.out_text,
                "out_image": report.out_image,
                "out_corpus": report.out_corpus,
                "sidecar": report.sidecar,
            }
        )
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
