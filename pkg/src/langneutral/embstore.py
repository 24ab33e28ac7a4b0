"""Embedding container format and sentence pooling.

A dump file holds either per-sentence token-embedding matrices (kind 0) or
pooled sentence vectors (kind 1).  Binary layout, little-endian:

    magic "MEMB" | version u32 (=1) | kind u8 | dim u32 | record_count u64
    | model_len u16 + model_id UTF-8 | layer u32
    | per record:
        id_len u16 + sentence_id UTF-8
        lang_len u8 + language UTF-8
        flags u8   (bit0 leading special token, bit1 trailing special token,
                    bit2 cls-pooled, kind-1 records only)
        kind 0: n_tokens u32 | n_words u32 + n_words x (start u32, end u32)
        payload f32 LE (n_tokens x dim for kind 0, dim for kind 1)

Values are stored as 32-bit floats; arithmetic on them is carried out in
64-bit and rounded back to 32-bit only when a new record is built.  A JSONL
text variant with the same fields is accepted for hand-written fixtures.
"""
from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import CorruptionError, FormatError, ValidationError

MAGIC = b"MEMB"
VERSION = 1

KIND_TOKENS = 0
KIND_SENTENCES = 1

POOL_CLS = "cls"
POOL_MEAN = "mean"

FLAG_LEADING_SPECIAL = 0x01
FLAG_TRAILING_SPECIAL = 0x02
FLAG_CLS_POOLED = 0x04


@dataclass(eq=False)
class TokenEmbeddingMatrix:
    """Per-token hidden states for one sentence, with optional word spans.

    ``word_spans`` are half-open subword index ranges, one per surface word;
    they must tile the non-special token range exactly when present.
    """

    sentence_id: str
    language: str
    values: np.ndarray  # (n_tokens, dim) float32
    word_spans: list[tuple[int, int]] = field(default_factory=list)
    leading_special: bool = False
    trailing_special: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values)
        if self.values.dtype.kind != "f":
            self.values = self.values.astype(np.float64)
        if self.values.ndim != 2:
            raise ValidationError(
                f"record {self.sentence_id!r}: token matrix must be 2-D, "
                f"got shape {self.values.shape}"
            )
        self.word_spans = [(int(s), int(e)) for s, e in self.word_spans]

    @property
    def n_tokens(self) -> int:
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        return self.values.shape[1]

    def span_range(self) -> tuple[int, int]:
        """Token range that word spans must cover (specials excluded)."""
        start = 1 if self.leading_special else 0
        end = self.n_tokens - 1 if self.trailing_special else self.n_tokens
        return start, end

    def validate(self):
        if self.n_tokens < 1:
            raise ValidationError(f"record {self.sentence_id!r}: n_tokens must be >= 1")
        if not np.all(np.isfinite(self.values)):
            raise ValidationError(f"record {self.sentence_id!r}: non-finite value")
        if self.word_spans:
            start, end = self.span_range()
            pos = start
            for s, e in self.word_spans:
                if s != pos or e <= s:
                    raise ValidationError(
                        f"record {self.sentence_id!r}: word_spans must tile "
                        f"[{start}, {end}) without gaps or overlaps"
                    )
                pos = e
            if pos != end:
                raise ValidationError(
                    f"record {self.sentence_id!r}: word_spans cover [{start}, {pos}) "
                    f"but tokens extend to {end}"
                )

    def flags_byte(self) -> int:
        return (FLAG_LEADING_SPECIAL if self.leading_special else 0) | (
            FLAG_TRAILING_SPECIAL if self.trailing_special else 0
        )


@dataclass(eq=False)
class SentenceVector:
    """One pooled sentence representation."""

    sentence_id: str
    language: str
    pooling: str  # POOL_CLS or POOL_MEAN
    vector: np.ndarray  # (dim,) float32

    def __post_init__(self):
        self.vector = np.asarray(self.vector)
        if self.vector.dtype.kind != "f":
            self.vector = self.vector.astype(np.float64)
        if self.vector.ndim != 1:
            raise ValidationError(
                f"record {self.sentence_id!r}: vector must be 1-D, "
                f"got shape {self.vector.shape}"
            )

    @property
    def dim(self) -> int:
        return self.vector.shape[0]

    def validate(self):
        if self.pooling not in (POOL_CLS, POOL_MEAN):
            raise ValidationError(
                f"record {self.sentence_id!r}: unknown pooling {self.pooling!r}"
            )
        if not np.all(np.isfinite(self.vector)):
            raise ValidationError(f"record {self.sentence_id!r}: non-finite value")

    def flags_byte(self) -> int:
        return FLAG_CLS_POOLED if self.pooling == POOL_CLS else 0


@dataclass
class EmbeddingSet:
    """An ordered collection of records sharing one dimensionality.

    Record order is corpus line order; positional parallelism across sets
    relies on it.
    """

    model_id: str
    layer: int
    dim: int
    records: list

    @property
    def kind(self) -> int:
        if self.records and isinstance(self.records[0], TokenEmbeddingMatrix):
            return KIND_TOKENS
        return KIND_SENTENCES

    def validate(self):
        if self.layer < 0:
            raise ValidationError(f"layer must be >= 0, got {self.layer}")
        kinds = {type(r) for r in self.records}
        if len(kinds) > 1:
            raise ValidationError("mixed record types in one set")
        for rec in self.records:
            if rec.dim != self.dim:
                raise ValidationError(
                    f"record {rec.sentence_id!r}: dim {rec.dim} != set dim {self.dim}"
                )
            rec.validate()

    def __eq__(self, other):
        if not isinstance(other, EmbeddingSet):
            return NotImplemented
        if (self.model_id, self.layer, self.dim) != (other.model_id, other.layer, other.dim):
            return False
        if len(self.records) != len(other.records):
            return False
        for a, b in zip(self.records, other.records):
            if type(a) is not type(b):
                return False
            if isinstance(a, TokenEmbeddingMatrix):
                same = (
                    a.sentence_id == b.sentence_id
                    and a.language == b.language
                    and a.word_spans == b.word_spans
                    and a.leading_special == b.leading_special
                    and a.trailing_special == b.trailing_special
                    and a.values.shape == b.values.shape
                    and np.array_equal(a.values, b.values)
                )
            else:
                same = (
                    a.sentence_id == b.sentence_id
                    and a.language == b.language
                    and a.pooling == b.pooling
                    and np.array_equal(a.vector, b.vector)
                )
            if not same:
                return False
        return True


# ---------------------------------------------------------------------------
# binary io
# ---------------------------------------------------------------------------

_HEADER = struct.Struct("<4sIBIQ")


def write_dump(emb_set: EmbeddingSet, path) -> None:
    """Serialize a set; idempotent (same set always yields the same bytes).

    Validates before the file is opened, so failures leave no partial file.
    """
    emb_set.validate()
    kind = emb_set.kind
    out = bytearray()
    out += _HEADER.pack(MAGIC, VERSION, kind, emb_set.dim, len(emb_set.records))
    model = emb_set.model_id.encode("utf-8")
    out += struct.pack("<H", len(model)) + model
    out += struct.pack("<I", emb_set.layer)
    for rec in emb_set.records:
        rid = rec.sentence_id.encode("utf-8")
        lang = rec.language.encode("utf-8")
        if len(lang) > 255:
            raise ValidationError(f"record {rec.sentence_id!r}: language tag too long")
        out += struct.pack("<H", len(rid)) + rid
        out += struct.pack("<B", len(lang)) + lang
        out += struct.pack("<B", rec.flags_byte())
        if kind == KIND_TOKENS:
            out += struct.pack("<I", rec.n_tokens)
            out += struct.pack("<I", len(rec.word_spans))
            for s, e in rec.word_spans:
                out += struct.pack("<II", s, e)
            payload = rec.values
        else:
            payload = rec.vector
        out += np.ascontiguousarray(payload, dtype="<f4").tobytes()
    with open(path, "wb") as fh:
        fh.write(out)


class _Cursor:
    """Sequential reader that turns truncation into CorruptionError."""

    def __init__(self, data: bytes, path):
        self.data = data
        self.pos = 0
        self.path = path

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise CorruptionError(f"{self.path}: truncated file (wanted {n} more bytes)")
        chunk = self.data[self.pos : self.pos + n]
        self.pos += n
        return chunk

    def unpack(self, fmt: str):
        s = struct.Struct(fmt)
        return s.unpack(self.take(s.size))

    def done(self) -> bool:
        return self.pos == len(self.data)


def read_dump(path) -> EmbeddingSet:
    """Read a binary dump, verifying every invariant.

    Values come back bit-identical to what :func:`write_dump` stored.
    """
    with open(path, "rb") as fh:
        cur = _Cursor(fh.read(), path)
    if len(cur.data) < _HEADER.size:
        raise FormatError(f"{path}: file too short to be a container")
    magic, version, kind, dim, count = cur.unpack("<4sIBIQ")
    if magic != MAGIC:
        raise FormatError(f"{path}: bad magic {magic!r}")
    if version != VERSION:
        raise FormatError(f"{path}: unsupported version {version}")
    if kind not in (KIND_TOKENS, KIND_SENTENCES):
        raise FormatError(f"{path}: unknown kind {kind}")
    (model_len,) = cur.unpack("<H")
    model_id = cur.take(model_len).decode("utf-8")
    (layer,) = cur.unpack("<I")
    records = []
    for _ in range(count):
        (id_len,) = cur.unpack("<H")
        sid = cur.take(id_len).decode("utf-8")
        (lang_len,) = cur.unpack("<B")
        lang = cur.take(lang_len).decode("utf-8")
        (flags,) = cur.unpack("<B")
        if kind == KIND_TOKENS:
            (n_tokens,) = cur.unpack("<I")
            (n_words,) = cur.unpack("<I")
            spans = [cur.unpack("<II") for _ in range(n_words)]
            raw = cur.take(4 * n_tokens * dim)
            values = np.frombuffer(raw, dtype="<f4").reshape(n_tokens, dim)
            records.append(
                TokenEmbeddingMatrix(
                    sentence_id=sid,
                    language=lang,
                    values=values.copy(),
                    word_spans=spans,
                    leading_special=bool(flags & FLAG_LEADING_SPECIAL),
                    trailing_special=bool(flags & FLAG_TRAILING_SPECIAL),
                )
            )
        else:
            raw = cur.take(4 * dim)
            vector = np.frombuffer(raw, dtype="<f4").copy()
            pooling = POOL_CLS if flags & FLAG_CLS_POOLED else POOL_MEAN
            records.append(
                SentenceVector(sentence_id=sid, language=lang, pooling=pooling, vector=vector)
            )
    if not cur.done():
        raise CorruptionError(f"{path}: {len(cur.data) - cur.pos} trailing bytes")
    emb_set = EmbeddingSet(model_id=model_id, layer=layer, dim=dim, records=records)
    try:
        emb_set.validate()
    except ValidationError:
        raise
    return emb_set


# ---------------------------------------------------------------------------
# jsonl variant (reviewable fixtures)
# ---------------------------------------------------------------------------


def write_jsonl(emb_set: EmbeddingSet, path) -> None:
    emb_set.validate()
    lines = [
        json.dumps(
            {
                "model_id": emb_set.model_id,
                "layer": emb_set.layer,
                "dim": emb_set.dim,
                "kind": "tokens" if emb_set.kind == KIND_TOKENS else "sentences",
            },
            sort_keys=True,
        )
    ]
    for rec in emb_set.records:
        if isinstance(rec, TokenEmbeddingMatrix):
            obj = {
                "sentence_id": rec.sentence_id,
                "language": rec.language,
                "leading_special": rec.leading_special,
                "trailing_special": rec.trailing_special,
                "word_spans": [list(s) for s in rec.word_spans],
                "values": [[float(x) for x in row] for row in rec.values],
            }
        else:
            obj = {
                "sentence_id": rec.sentence_id,
                "language": rec.language,
                "pooling": rec.pooling,
                "vector": [float(x) for x in rec.vector],
            }
        lines.append(json.dumps(obj, sort_keys=True))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def read_jsonl(path) -> EmbeddingSet:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    if not lines:
        raise FormatError(f"{path}: empty jsonl container")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: bad jsonl header: {exc}") from exc
    kind = {"tokens": KIND_TOKENS, "sentences": KIND_SENTENCES}.get(header.get("kind"))
    if kind is None:
        raise FormatError(f"{path}: jsonl header kind must be 'tokens' or 'sentences'")
    dim = int(header["dim"])
    records = []
    for i, line in enumerate(lines[1:], start=2):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorruptionError(f"{path}:{i}: bad jsonl record: {exc}") from exc
        if kind == KIND_TOKENS:
            values = np.asarray(obj["values"], dtype=np.float32)
            if values.ndim != 2 or values.shape[1] != dim:
                raise CorruptionError(f"{path}:{i}: dimension mismatch")
            records.append(
                TokenEmbeddingMatrix(
                    sentence_id=obj["sentence_id"],
                    language=obj["language"],
                    values=values,
                    word_spans=[tuple(s) for s in obj.get("word_spans", [])],
                    leading_special=bool(obj.get("leading_special", False)),
                    trailing_special=bool(obj.get("trailing_special", False)),
                )
            )
        else:
            vector = np.asarray(obj["vector"], dtype=np.float32)
            if vector.shape != (dim,):
                raise CorruptionError(f"{path}:{i}: dimension mismatch")
            records.append(
                SentenceVector(
                    sentence_id=obj["sentence_id"],
                    language=obj["language"],
                    pooling=obj.get("pooling", POOL_MEAN),
                    vector=vector,
                )
            )
    emb_set = EmbeddingSet(
        model_id=header.get("model_id", ""),
        layer=int(header.get("layer", 0)),
        dim=dim,
        records=records,
    )
    emb_set.validate()
    return emb_set


def load(path) -> EmbeddingSet:
    """Read a dump in either format, sniffing the binary magic."""
    with open(path, "rb") as fh:
        head = fh.read(4)
    if head == MAGIC:
        return read_dump(path)
    return read_jsonl(path)


# ---------------------------------------------------------------------------
# pooling
# ---------------------------------------------------------------------------


def pool_mean(matrix: TokenEmbeddingMatrix, skip_special: bool = True) -> SentenceVector:
    """Mean of the token rows, excluding flagged special rows when asked."""
    matrix.validate()
    rows = np.asarray(matrix.values, dtype=np.float64)
    if skip_special:
        start, end = matrix.span_range()
        rows = rows[start:end]
    if rows.shape[0] == 0:
        raise ValidationError(
            f"record {matrix.sentence_id!r}: no rows left to pool "
            "(all tokens are flagged special)"
        )
    return SentenceVector(
        sentence_id=matrix.sentence_id,
        language=matrix.language,
        pooling=POOL_MEAN,
        vector=rows.mean(axis=0),
    )


def pool_cls(matrix: TokenEmbeddingMatrix) -> SentenceVector:
    """The leading special-token row; requires the leading-special flag."""
    matrix.validate()
    if not matrix.leading_special:
        raise ValidationError(
            f"record {matrix.sentence_id!r}: no leading special token flagged, "
            "cannot cls-pool"
        )
    return SentenceVector(
        sentence_id=matrix.sentence_id,
        language=matrix.language,
        pooling=POOL_CLS,
        vector=matrix.values[0].copy(),
    )


def pool_words(matrix: TokenEmbeddingMatrix) -> list[np.ndarray]:
    """One vector per surface word: the mean of its subword rows (float64)."""
    matrix.validate()
    if not matrix.word_spans:
        raise ValidationError(
            f"record {matrix.sentence_id!r}: word_spans missing, cannot word-pool"
        )
    rows = np.asarray(matrix.values, dtype=np.float64)
    return [rows[s:e].mean(axis=0) for s, e in matrix.word_spans]


def pool_set(emb_set: EmbeddingSet, pooling: str, skip_special: bool = True) -> EmbeddingSet:
    """Pool every token matrix in a set into sentence vectors."""
    if emb_set.kind != KIND_TOKENS:
        raise ValidationError("pooling expects a token-matrix dump (kind 0)")
    if pooling == POOL_MEAN:
        records = [pool_mean(m, skip_special=skip_special) for m in emb_set.records]
    elif pooling == POOL_CLS:
        records = [pool_cls(m) for m in emb_set.records]
    else:
        raise ValidationError(f"unknown pooling {pooling!r}")
    return EmbeddingSet(
        model_id=emb_set.model_id, layer=emb_set.layer, dim=emb_set.dim, records=records
    )
