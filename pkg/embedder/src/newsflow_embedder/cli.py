"""Command-line entry point: units.jsonl in, EMB1 file out."""

from __future__ import annotations

import argparse
import sys

from .embed import EmbedJob, embed_corpus
from .encoders import DEFAULT_MODEL
from .errors import EmbedderError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embed",
        description="Embed corpus units with a sentence encoder and write EMB1",
    )
    parser.add_argument("--units", required=True,
                        help="unit list (JSONL with unit_id and text per line)")
    parser.add_argument("--out", required=True, help="output EMB1 path")
    parser.add_argument("--model", default=DEFAULT_MODEL,
                        help=f"encoder identifier (default {DEFAULT_MODEL}; "
                             "hashing/<dim> for the offline encoder)")
    parser.add_argument("--batch", type=int, default=64, help="batch size (default 64)")
    parser.add_argument("--expect-dim", type=int, default=None,
                        help="fail unless the model emits this dimension")
    parser.add_argument("--device", default=None, help="device hint for the backend")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    job = None
    try:
        job = EmbedJob(
            units_path=args.units,
            out_path=args.out,
            model=args.model,
            batch_size=args.batch,
            expect_dim=args.expect_dim,
            device=args.device,
        )
        count = embed_corpus(job)
    except EmbedderError as exc:
        print(f"error ({type(exc).__name__}): {exc}", file=sys.stderr)
        return exc.exit_code
    print(f"wrote {count} vectors to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
