"""Writer for the embedding container format.

Independent implementation of the wire format the probing toolkit reads;
the byte layout is the contract between the two packages.  Little-endian:

    magic "MEMB" | version u32 (=1) | kind u8 (0 = token matrices)
    | dim u32 | record_count u64 | model_len u16 + model_id | layer u32
    | per record:
        id_len u16 + sentence_id | lang_len u8 + language
        flags u8 (bit0 leading special, bit1 trailing special)
        n_tokens u32 | n_words u32 + n_words x (start u32, end u32)
        n_tokens x dim f32 LE
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

MAGIC = b"MEMB"
VERSION = 1
KIND_TOKENS = 0

FLAG_LEADING_SPECIAL = 0x01
FLAG_TRAILING_SPECIAL = 0x02


@dataclass
class TokenRecord:
    sentence_id: str
    language: str
    values: np.ndarray  # (n_tokens, dim) float32
    word_spans: list = field(default_factory=list)
    leading_special: bool = False
    trailing_special: bool = False

    def validate(self, dim: int):
        values = np.asarray(self.values)
        if values.ndim != 2 or values.shape[0] < 1 or values.shape[1] != dim:
            raise ValueError(
                f"record {self.sentence_id!r}: bad shape {values.shape} for dim {dim}"
            )
        if not np.all(np.isfinite(values)):
            raise ValueError(f"record {self.sentence_id!r}: non-finite hidden state")
        if self.word_spans:
            start = 1 if self.leading_special else 0
            end = values.shape[0] - 1 if self.trailing_special else values.shape[0]
            pos = start
            for s, e in self.word_spans:
                if s != pos or e <= s:
                    raise ValueError(
                        f"record {self.sentence_id!r}: word spans do not tile [{start}, {end})"
                    )
                pos = e
            if pos != end:
                raise ValueError(
                    f"record {self.sentence_id!r}: word spans stop at {pos}, expected {end}"
                )


def write_token_dump(path, model_id: str, layer: int, dim: int, records) -> None:
    """Serialize token records; validates everything before opening the file."""
    for rec in records:
        rec.validate(dim)
    out = bytearray()
    out += struct.pack("<4sIBIQ", MAGIC, VERSION, KIND_TOKENS, dim, len(records))
    model = model_id.encode("utf-8")
    out += struct.pack("<H", len(model)) + model
    out += struct.pack("<I", layer)
    for rec in records:
        sid = rec.sentence_id.encode("utf-8")
        lang = rec.language.encode("utf-8")
        if len(lang) > 255:
            raise ValueError(f"record {rec.sentence_id!r}: language tag too long")
        flags = (FLAG_LEADING_SPECIAL if rec.leading_special else 0) | (
            FLAG_TRAILING_SPECIAL if rec.trailing_special else 0
        )
        out += struct.pack("<H", len(sid)) + sid
        out += struct.pack("<B", len(lang)) + lang
        out += struct.pack("<B", flags)
        out += struct.pack("<I", rec.values.shape[0])
        out += struct.pack("<I", len(rec.word_spans))
        for s, e in rec.word_spans:
            out += struct.pack("<II", int(s), int(e))
        out += np.ascontiguousarray(rec.values, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(out)
