"""Conversion of static aligned word-vector tables to token dumps.

Each corpus sentence becomes a token matrix with one row per in-vocabulary
word and identity word spans; out-of-vocabulary words are dropped and
counted, and sentences with no known word are skipped and logged.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from .container import TokenRecord, write_token_dump
from .contextual import SkippedSentence, write_skip_list


@dataclass
class StaticConversionResult:
    dump_path: str
    n_emitted: int
    oov_dropped: int
    in_vocab_kept: int
    skipped: list = field(default_factory=list)


def read_vector_table(path) -> tuple[dict, int]:
    """Parse a word-per-line float table; a leading `count dim` header is allowed."""
    table = {}
    dim = None
    with open(path, "r", encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split(" ")
            if line_no == 1 and len(parts) == 2:
                try:
                    int(parts[0]), int(parts[1])
                    continue  # fastText-style header
                except ValueError:
                    pass
            if len(parts) < 2:
                continue
            word = parts[0]
            try:
                vec = np.asarray([float(x) for x in parts[1:] if x != ""], dtype=np.float32)
            except ValueError as exc:
                raise ValueError(f"{path}:{line_no}: bad vector entry: {exc}") from exc
            if dim is None:
                dim = vec.shape[0]
            elif vec.shape[0] != dim:
                raise ValueError(
                    f"{path}:{line_no}: vector has {vec.shape[0]} entries, expected {dim}"
                )
            table[word] = vec
    if not table:
        raise ValueError(f"{path}: empty vector table")
    return table, dim


def convert_static(table_path, corpus_path, language: str, output_path) -> StaticConversionResult:
    table, dim = read_vector_table(table_path)
    with open(corpus_path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    records = []
    skipped = []
    oov = 0
    kept = 0
    for line_no, line in enumerate(lines):
        sid = f"line{line_no:06d}"
        words = line.split()
        rows = [table[w] for w in words if w in table]
        dropped = len(words) - len(rows)
        oov += dropped
        if not rows:
            skipped.append(SkippedSentence(line_no, sid, "no in-vocabulary words"))
            continue
        kept += len(rows)
        records.append(
            TokenRecord(
                sentence_id=sid,
                language=language,
                values=np.stack(rows),
                word_spans=[(k, k + 1) for k in range(len(rows))],
            )
        )
    write_token_dump(output_path, f"static:{os.path.basename(str(table_path))}", 0, dim, records)
    write_skip_list(str(output_path) + ".skipped.txt", skipped)
    return StaticConversionResult(
        dump_path=str(output_path),
        n_emitted=len(records),
        oov_dropped=oov,
        in_vocab_kept=kept,
        skipped=skipped,
    )
