"""Synthetic parallel corpora under the additive representation model.

Each sentence vector is a shared meaning component plus a fixed per-language
offset plus Gaussian noise.  The generator is the desk-scale test bed for
the centering and projection claims: subtracting the per-language centroid
removes (an estimate of) the offset, and a linear map between two languages'
spaces exists by construction.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embstore import POOL_MEAN, EmbeddingSet, SentenceVector
from .errors import ConfigError


@dataclass
class SynthConfig:
    languages: tuple = ("aa", "bb")
    n_sentences: int = 100
    dim: int = 16
    offset_scale: float = 3.0
    noise_scale: float = 0.1
    seed: int = 0

    def validate(self):
        if len(self.languages) < 2:
            raise ConfigError("need at least two synthetic languages")
        if len(set(self.languages)) != len(self.languages):
            raise ConfigError("duplicate synthetic language codes")
        if self.dim < 2:
            raise ConfigError("dim must be >= 2")
        if self.n_sentences < 1:
            raise ConfigError("n_sentences must be >= 1")
        if self.offset_scale < 0 or self.noise_scale < 0:
            raise ConfigError("scales must be non-negative")


def generate_additive(config: SynthConfig) -> dict:
    """language -> positionally parallel EmbeddingSet of sentence vectors.

    Draw order is fixed (meanings, then per-language offset and noise in the
    given language order) so a seed pins every byte of the output.
    """
    config.validate()
    rng = np.random.default_rng(config.seed)
    meanings = rng.standard_normal((config.n_sentences, config.dim))
    sets = {}
    for lang in config.languages:
        offset = config.offset_scale * rng.standard_normal(config.dim)
        noise = config.noise_scale * rng.standard_normal((config.n_sentences, config.dim))
        vectors = (meanings + offset + noise).astype(np.float32)
        records = [
            SentenceVector(
                sentence_id=f"s{i:06d}",
                language=lang,
                pooling=POOL_MEAN,
                vector=vectors[i],
            )
            for i in range(config.n_sentences)
        ]
        sets[lang] = EmbeddingSet(
            model_id="synthetic-additive", layer=0, dim=config.dim, records=records
        )
    return sets


@dataclass
class WordPairConfig:
    """Synthetic aligned sentence pairs for word-alignment experiments.

    Both sides realize the same pool of word meanings (each pool entry
    appears on each side at least once; one side may repeat entries), so the
    minimum-cost cover is structurally unambiguous.
    """

    n_pairs: int = 100
    dim: int = 32
    min_words: int = 3
    max_words: int = 6
    max_extra: int = 3
    offset_scale: float = 0.5
    noise_scale: float = 0.05
    seed: int = 0


def generate_word_pairs(config: WordPairConfig):
    """Returns (pairs, golds, pair_seeds).

    Pairs are (src_words, tgt_words) float64 arrays and golds are the sets
    of same-pool-entry links.  Each pair draws from its own child seed
    (master, index) so a single pair can be regenerated and reported alone.
    """
    offset_rng = np.random.default_rng(config.seed)
    off_src = config.offset_scale * offset_rng.standard_normal(config.dim)
    off_tgt = config.offset_scale * offset_rng.standard_normal(config.dim)
    pairs = []
    golds = []
    pair_seeds = []
    for idx in range(config.n_pairs):
        rng = np.random.default_rng((config.seed, idx))
        pair_seeds.append(f"{config.seed}:{idx}")
        base = int(rng.integers(config.min_words, config.max_words + 1))
        pool = rng.standard_normal((base, config.dim))
        extras = int(rng.integers(0, config.max_extra + 1))
        dup_side = int(rng.integers(0, 2))
        src_ids = list(rng.permutation(base))
        tgt_ids = list(rng.permutation(base))
        extra_ids = [int(x) for x in rng.integers(0, base, size=extras)]
        if dup_side == 0:
            src_ids += extra_ids
            src_ids = [src_ids[i] for i in rng.permutation(len(src_ids))]
        else:
            tgt_ids += extra_ids
            tgt_ids = [tgt_ids[i] for i in rng.permutation(len(tgt_ids))]
        src = pool[src_ids] + off_src + config.noise_scale * rng.standard_normal(
            (len(src_ids), config.dim)
        )
        tgt = pool[tgt_ids] + off_tgt + config.noise_scale * rng.standard_normal(
            (len(tgt_ids), config.dim)
        )
        gold = {
            (i, j)
            for i, si in enumerate(src_ids)
            for j, tj in enumerate(tgt_ids)
            if si == tj
        }
        pairs.append((src, tgt))
        golds.append(gold)
    return pairs, golds, pair_seeds
