"""Standalone command: manifest in, feature CSV out."""

from __future__ import annotations

import argparse
import sys

from .backbones import DEFAULT_BACKBONE, REGISTRY
from .extract import ExtractorConfig, extract_features


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="simspace-extract",
        description="extract penultimate-layer activations for every manifest item")
    parser.add_argument("--manifest", required=True,
                        help="CSV with item_id,group_id,file_path rows")
    parser.add_argument("--out", required=True, help="output feature CSV")
    parser.add_argument("--backbone", default=DEFAULT_BACKBONE, choices=sorted(REGISTRY))
    parser.add_argument("--weights", default="pretrained", choices=("pretrained", "random"),
                        help="'random' is a fixed-seed initialization for offline use")
    parser.add_argument("--batch-size", type=int, default=16)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = ExtractorConfig(manifest=args.manifest, out_csv=args.out,
                                 backbone=args.backbone, weights=args.weights,
                                 batch_size=args.batch_size)
        out = extract_features(config)
    except (ValueError, OSError) as exc:
        print(str(exc), file=sys.stderr)
        return 1
    print(f"wrote {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
