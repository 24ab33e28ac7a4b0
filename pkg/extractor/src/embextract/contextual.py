"""Per-layer hidden-state extraction from pretrained encoder checkpoints.

Layer indices follow hidden_states order: 0 is the embedding output,
1..L the encoder layers.  Sentences the model cannot represent (too long,
interior special tokens, empty lines) are skipped and logged so parallel
corpora can be filtered consistently across languages; everything else is
emitted in input line order.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np
import torch
from transformers import AutoModel, AutoTokenizer

from .container import TokenRecord, write_token_dump


@dataclass
class ExtractionJob:
    model_id: str
    layers: list
    input_path: str
    language: str
    pretokenized: bool = False
    max_tokens: int | None = None  # default: the model's position limit


@dataclass
class SkippedSentence:
    line_no: int  # 0-based input line
    sentence_id: str
    reason: str


@dataclass
class ExtractionResult:
    dumps: dict  # layer -> output path
    skipped: list = field(default_factory=list)
    n_emitted: int = 0


def _word_spans_from_ids(word_ids, n_tokens: int):
    """Group contiguous equal word ids into half-open subword ranges."""
    spans = []
    current = None
    start = None
    for idx, wid in enumerate(word_ids):
        if wid is None:
            if current is not None:
                spans.append((start, idx))
                current = None
            continue
        if wid != current:
            if current is not None:
                spans.append((start, idx))
            current = wid
            start = idx
    if current is not None:
        spans.append((start, n_tokens))
    return spans


def extract_contextual(job: ExtractionJob, outdir) -> ExtractionResult:
    """One container dump per requested layer, plus the skip list."""
    tokenizer = AutoTokenizer.from_pretrained(job.model_id)
    model = AutoModel.from_pretrained(job.model_id)
    model.eval()

    n_layers = model.config.num_hidden_layers
    layers = [int(l) for l in job.layers]
    for layer in layers:
        if not 0 <= layer <= n_layers:
            raise ValueError(f"layer {layer} out of range (model has 0..{n_layers})")
    limit = job.max_tokens or min(
        getattr(model.config, "max_position_embeddings", 512),
        tokenizer.model_max_length if tokenizer.model_max_length < 10**9 else 512,
    )

    with open(job.input_path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()

    per_layer: dict[int, list[TokenRecord]] = {layer: [] for layer in layers}
    skipped = []
    emitted = 0
    with torch.no_grad():
        for line_no, line in enumerate(lines):
            sid = f"line{line_no:06d}"
            text = line.strip()
            if not text:
                skipped.append(SkippedSentence(line_no, sid, "empty"))
                continue
            if job.pretokenized:
                words = text.split()
                enc = tokenizer(
                    words,
                    is_split_into_words=True,
                    return_special_tokens_mask=True,
                    return_tensors=None,
                )
            else:
                enc = tokenizer(text, return_special_tokens_mask=True, return_tensors=None)
            input_ids = enc["input_ids"]
            n_tokens = len(input_ids)
            if n_tokens > limit:
                skipped.append(SkippedSentence(line_no, sid, f"too-long ({n_tokens} > {limit})"))
                continue
            special = enc["special_tokens_mask"]
            leading = bool(special[0])
            trailing = bool(special[-1]) and n_tokens > 1
            interior = [k for k in range(1, n_tokens - 1) if special[k]]
            if interior:
                skipped.append(SkippedSentence(line_no, sid, "interior special token"))
                continue
            spans = []
            if job.pretokenized:
                spans = _word_spans_from_ids(enc.word_ids(), n_tokens)
                if len(spans) != len(words):
                    skipped.append(
                        SkippedSentence(line_no, sid, "tokenizer dropped or merged words")
                    )
                    continue
            outputs = model(
                input_ids=torch.tensor([input_ids]),
                attention_mask=torch.tensor([enc["attention_mask"]]),
                output_hidden_states=True,
            )
            for layer in layers:
                states = outputs.hidden_states[layer][0].numpy().astype(np.float32)
                per_layer[layer].append(
                    TokenRecord(
                        sentence_id=sid,
                        language=job.language,
                        values=states,
                        word_spans=spans,
                        leading_special=leading,
                        trailing_special=trailing,
                    )
                )
            emitted += 1

    os.makedirs(outdir, exist_ok=True)
    dim = model.config.hidden_size
    dumps = {}
    for layer in layers:
        path = os.path.join(outdir, f"{job.language}.layer{layer:02d}.memb")
        write_token_dump(path, job.model_id, layer, dim, per_layer[layer])
        dumps[layer] = path
    write_skip_list(os.path.join(outdir, f"{job.language}.skipped.txt"), skipped)
    return ExtractionResult(dumps=dumps, skipped=skipped, n_emitted=emitted)


def write_skip_list(path, skipped) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for s in skipped:
            fh.write(f"{s.line_no}\t{s.sentence_id}\t{s.reason}\n")
