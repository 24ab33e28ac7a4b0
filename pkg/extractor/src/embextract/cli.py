"""Command line for the extractor: contextual dumps and static-table conversion."""
from __future__ import annotations

import argparse
import json
import sys

from .contextual import ExtractionJob, extract_contextual
from .static_vec import convert_static


def parse_layers(spec: str) -> list:
    """Accepts `0..12`, comma lists, or a mix of both."""
    layers = []
    for chunk in spec.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if ".." in chunk:
            lo, hi = chunk.split("..")
            layers.extend(range(int(lo), int(hi) + 1))
        else:
            layers.append(int(chunk))
    if not layers:
        raise ValueError(f"no layers in {spec!r}")
    return sorted(set(layers))


def cmd_extract(args) -> int:
    job = ExtractionJob(
        model_id=args.model,
        layers=parse_layers(args.layers),
        input_path=args.input,
        language=args.lang,
        pretokenized=args.pretokenized,
        max_tokens=args.max_tokens,
    )
    result = extract_contextual(job, args.outdir)
    json.dump(
        {
            "dumps": {str(k): v for k, v in result.dumps.items()},
            "emitted": result.n_emitted,
            "skipped": len(result.skipped),
        },
        sys.stdout,
        sort_keys=True,
        indent=2,
    )
    sys.stdout.write("\n")
    return 0


def cmd_convert_static(args) -> int:
    result = convert_static(args.table, args.input, args.lang, args.output)
    json.dump(
        {
            "dump": result.dump_path,
            "emitted": result.n_emitted,
            "oov_dropped": result.oov_dropped,
            "in_vocab_kept": result.in_vocab_kept,
            "skipped": len(result.skipped),
        },
        sys.stdout,
        sort_keys=True,
        indent=2,
    )
    sys.stdout.write("\n")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embextract", description="Dump encoder hidden states to embedding containers."
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="per-layer contextual token embeddings")
    p.add_argument("--model", required=True, help="checkpoint id or local path")
    p.add_argument("--layers", required=True, help="e.g. 0..12 or 0,4,8")
    p.add_argument("--lang", required=True)
    p.add_argument("--input", required=True, help="UTF-8 text, one sentence per line")
    p.add_argument("--outdir", required=True)
    p.add_argument("--pretokenized", action="store_true",
                   help="input words are space-separated; record word spans")
    p.add_argument("--max-tokens", type=int, default=None)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("convert-static", help="static aligned word-vector table to dump")
    p.add_argument("--table", required=True, help="word-per-line float table")
    p.add_argument("--input", required=True, help="whitespace-tokenizable corpus")
    p.add_argument("--lang", required=True)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_convert_static)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
