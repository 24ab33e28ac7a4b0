"""Vector-space primitives: cosine distance, centroids, centering, projections.

All functions compute in float64 regardless of the input dtype.  Zero-norm
vectors are rejected everywhere cosine geometry is involved: they indicate
corrupted embeddings upstream, not a case worth smoothing over.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .embstore import (
    KIND_SENTENCES,
    POOL_MEAN,
    EmbeddingSet,
    SentenceVector,
    read_dump,
    write_dump,
)
from .errors import ValidationError


def as_matrix(vectors) -> np.ndarray:
    """Stack sentence vectors (or an EmbeddingSet, or an array) into n x d float64."""
    if isinstance(vectors, EmbeddingSet):
        vectors = vectors.records
    if isinstance(vectors, np.ndarray):
        return np.asarray(vectors, dtype=np.float64)
    if len(vectors) and isinstance(vectors[0], SentenceVector):
        return np.stack([np.asarray(v.vector, dtype=np.float64) for v in vectors])
    return np.asarray(vectors, dtype=np.float64)


def cosine_distance(a, b) -> float:
    """1 - cos(a, b); in [0, 2].  Raises on zero-norm or mismatched dims."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValidationError(f"dim mismatch: {a.shape} vs {b.shape}")
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValidationError("zero-norm vector in cosine distance")
    # clip shields against |cos| creeping past 1 by one ulp
    return float(1.0 - min(1.0, max(-1.0, np.dot(a, b) / (na * nb))))


def cosine_distance_matrix(A, B, names_a=None, names_b=None) -> np.ndarray:
    """Pairwise cosine distances between the rows of A and B."""
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    if A.shape[1] != B.shape[1]:
        raise ValidationError(f"dim mismatch: {A.shape[1]} vs {B.shape[1]}")
    norms_a = np.linalg.norm(A, axis=1)
    norms_b = np.linalg.norm(B, axis=1)
    for norms, names, side in ((norms_a, names_a, "left"), (norms_b, names_b, "right")):
        bad = np.flatnonzero(norms == 0.0)
        if bad.size:
            which = names[bad[0]] if names is not None else f"index {bad[0]}"
            raise ValidationError(f"zero-norm vector on {side} side ({which})")
    sims = (A @ B.T) / np.outer(norms_a, norms_b)
    return 1.0 - np.clip(sims, -1.0, 1.0)


@dataclass
class LanguageCentroid:
    """Mean sentence representation of one language."""

    language: str
    vector: np.ndarray  # (dim,) float64
    sample_count: int

    def __post_init__(self):
        self.vector = np.asarray(self.vector, dtype=np.float64)


def centroid(vectors) -> LanguageCentroid:
    """Element-wise mean of a non-empty, single-language vector collection."""
    if isinstance(vectors, EmbeddingSet):
        vectors = vectors.records
    vectors = list(vectors)
    if not vectors:
        raise ValidationError("cannot take the centroid of an empty set")
    languages = {v.language for v in vectors}
    if len(languages) > 1:
        raise ValidationError(f"mixed languages in centroid input: {sorted(languages)}")
    mat = as_matrix(vectors)
    return LanguageCentroid(
        language=vectors[0].language,
        vector=mat.mean(axis=0),
        sample_count=len(vectors),
    )


def center(vectors, cent: LanguageCentroid) -> list[SentenceVector]:
    """Subtract a centroid from every vector; order is preserved."""
    if isinstance(vectors, EmbeddingSet):
        vectors = vectors.records
    out = []
    for v in vectors:
        vec = np.asarray(v.vector, dtype=np.float64)
        if vec.shape != cent.vector.shape:
            raise ValidationError(
                f"record {v.sentence_id!r}: dim {vec.shape[0]} != centroid dim "
                f"{cent.vector.shape[0]}"
            )
        out.append(
            SentenceVector(
                sentence_id=v.sentence_id,
                language=v.language,
                pooling=v.pooling,
                vector=vec - cent.vector,
            )
        )
    return out


@dataclass
class LinearProjection:
    """A dim x dim map (optionally affine) from one language's space to another's."""

    matrix: np.ndarray  # (dim, dim) float64
    bias: np.ndarray | None = None  # (dim,) float64
    source_language: str = ""
    target_language: str = ""
    residual_mse: float | None = None
    regularized: bool = False

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        if self.bias is not None:
            self.bias = np.asarray(self.bias, dtype=np.float64)

    def validate(self):
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise ValidationError(f"projection matrix must be square, got {self.matrix.shape}")
        if not np.all(np.isfinite(self.matrix)):
            raise ValidationError("non-finite entry in projection matrix")
        if self.bias is not None and not np.all(np.isfinite(self.bias)):
            raise ValidationError("non-finite entry in projection bias")


def fit_projection(
    src,
    tgt,
    with_bias: bool = False,
    source_language: str = "",
    target_language: str = "",
) -> LinearProjection:
    """Least-squares fit of tgt_i ~ P src_i (+ b) via the normal equations.

    Falls back to a Tikhonov-regularized solve (lambda = 1e-8 tr(G)/d) when
    the normal system is rank deficient, and marks the result ``regularized``.
    """
    X = as_matrix(src)
    Y = as_matrix(tgt)
    if X.shape[0] != Y.shape[0]:
        raise ValidationError(f"sample count mismatch: {X.shape[0]} vs {Y.shape[0]}")
    if X.shape[0] == 0:
        raise ValidationError("cannot fit a projection on zero samples")
    if X.shape[1] != Y.shape[1]:
        raise ValidationError(f"dim mismatch: {X.shape[1]} vs {Y.shape[1]}")
    dim = X.shape[1]
    A = np.hstack([X, np.ones((X.shape[0], 1))]) if with_bias else X
    G = A.T @ A
    C = A.T @ Y
    regularized = False
    try:
        cho = scipy.linalg.cho_factor(G)
        W = scipy.linalg.cho_solve(cho, C)
        if not np.all(np.isfinite(W)):
            raise np.linalg.LinAlgError("non-finite solution")
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError):
        lam = 1e-8 * np.trace(G) / G.shape[0]
        if lam <= 0.0:
            lam = 1e-8
        W = np.linalg.solve(G + lam * np.eye(G.shape[0]), C)
        regularized = True
    if with_bias:
        matrix = W[:-1].T
        bias = W[-1]
    else:
        matrix = W.T
        bias = None
    pred = X @ matrix.T + (bias if bias is not None else 0.0)
    residual = float(np.mean((pred - Y) ** 2))
    proj = LinearProjection(
        matrix=matrix,
        bias=bias,
        source_language=source_language,
        target_language=target_language,
        residual_mse=residual,
        regularized=regularized,
    )
    proj.validate()
    return proj


def apply_projection(proj: LinearProjection, v) -> np.ndarray:
    """P v (+ b) for a single vector, or row-wise for a 2-D array."""
    v = np.asarray(v, dtype=np.float64)
    dim = proj.matrix.shape[1]
    if v.shape[-1] != dim:
        raise ValidationError(f"dim mismatch: vector has {v.shape[-1]}, projection {dim}")
    out = v @ proj.matrix.T
    if proj.bias is not None:
        out = out + proj.bias
    return out


def project_records(proj: LinearProjection, vectors) -> list[SentenceVector]:
    """Apply a projection to every sentence vector, keeping ids and pooling."""
    if isinstance(vectors, EmbeddingSet):
        vectors = vectors.records
    out = []
    for v in vectors:
        out.append(
            SentenceVector(
                sentence_id=v.sentence_id,
                language=v.language,
                pooling=v.pooling,
                vector=apply_projection(proj, np.asarray(v.vector, np.float64)),
            )
        )
    return out


# ---------------------------------------------------------------------------
# serialization: container (kind 1) + json sidecar
# ---------------------------------------------------------------------------


def write_projection(proj: LinearProjection, path) -> None:
    """Store the matrix as a kind-1 container; languages and bias in a sidecar."""
    proj.validate()
    dim = proj.matrix.shape[0]
    records = [
        SentenceVector(
            sentence_id=f"row{i:04d}",
            language=proj.source_language or "xx",
            pooling=POOL_MEAN,
            vector=proj.matrix[i].astype(np.float32),
        )
        for i in range(dim)
    ]
    emb_set = EmbeddingSet(model_id="projection", layer=0, dim=dim, records=records)
    write_dump(emb_set, path)
    sidecar = {
        "source_language": proj.source_language,
        "target_language": proj.target_language,
        "bias": None if proj.bias is None else [float(x) for x in proj.bias],
        "residual_mse": proj.residual_mse,
        "regularized": proj.regularized,
        "dim": dim,
    }
    with open(str(path) + ".json", "w", encoding="utf-8") as fh:
        json.dump(sidecar, fh, sort_keys=True, indent=2)
        fh.write("\n")


def read_projection(path) -> LinearProjection:
    emb_set = read_dump(path)
    if emb_set.kind != KIND_SENTENCES or len(emb_set.records) != emb_set.dim:
        raise ValidationError(f"{path}: not a serialized projection")
    matrix = np.stack([np.asarray(r.vector, np.float64) for r in emb_set.records])
    try:
        with open(str(path) + ".json", "r", encoding="utf-8") as fh:
            sidecar = json.load(fh)
    except FileNotFoundError:
        sidecar = {}
    bias = sidecar.get("bias")
    proj = LinearProjection(
        matrix=matrix,
        bias=None if bias is None else np.asarray(bias, np.float64),
        source_language=sidecar.get("source_language", ""),
        target_language=sidecar.get("target_language", ""),
        residual_mse=sidecar.get("residual_mse"),
        regularized=bool(sidecar.get("regularized", False)),
    )
    proj.validate()
    return proj
