import numpy as np

from langneutral.embstore import (
    POOL_MEAN,
    EmbeddingSet,
    SentenceVector,
    TokenEmbeddingMatrix,
)


def make_token_matrix(
    rng,
    n_tokens=5,
    dim=8,
    sentence_id="s0",
    language="xx",
    with_spans=False,
    leading_special=False,
    trailing_special=False,
):
    values = rng.standard_normal((n_tokens, dim)).astype(np.float32)
    spans = []
    if with_spans:
        start = 1 if leading_special else 0
        end = n_tokens - 1 if trailing_special else n_tokens
        pos = start
        while pos < end:
            width = min(int(rng.integers(1, 3)), end - pos)
            spans.append((pos, pos + width))
            pos += width
    return TokenEmbeddingMatrix(
        sentence_id=sentence_id,
        language=language,
        values=values,
        word_spans=spans,
        leading_special=leading_special,
        trailing_special=trailing_special,
    )


def make_sentence_vectors(rng, n=10, dim=8, language="xx", prefix="s"):
    return [
        SentenceVector(
            sentence_id=f"{prefix}{i:04d}",
            language=language,
            pooling=POOL_MEAN,
            vector=rng.standard_normal(dim).astype(np.float32),
        )
        for i in range(n)
    ]


def make_sentence_set(rng, n=10, dim=8, language="xx", model_id="m", layer=0):
    return EmbeddingSet(
        model_id=model_id,
        layer=layer,
        dim=dim,
        records=make_sentence_vectors(rng, n=n, dim=dim, language=language),
    )
