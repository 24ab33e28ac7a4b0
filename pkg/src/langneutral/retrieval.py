"""Parallel sentence retrieval by nearest cosine neighbor.

Gold alignment is positional: query i matches candidate i, following the
line-aligned layout of multi-parallel corpora.  Ties in the argmin are
broken toward the lowest candidate index.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ValidationError
from .geometry import apply_projection, as_matrix, cosine_distance_matrix

MODES = ("plain", "centered", "projected")


@dataclass
class RetrievalResult:
    query_language: str
    candidate_language: str
    mode: str
    predictions: list[int]
    accuracy: float


def retrieve(
    queries,
    candidates,
    query_language: str = "",
    candidate_language: str = "",
    mode: str = "plain",
) -> RetrievalResult:
    """Nearest candidate per query under cosine distance, scored positionally."""
    Q = as_matrix(queries)
    C = as_matrix(candidates)
    if Q.shape[0] == 0 or C.shape[0] == 0:
        raise ValidationError("retrieval needs non-empty query and candidate sets")
    names_q = _record_names(queries)
    names_c = _record_names(candidates)
    dists = cosine_distance_matrix(Q, C, names_a=names_q, names_b=names_c)
    predictions = np.argmin(dists, axis=1)
    accuracy = float(np.mean(predictions == np.arange(Q.shape[0])))
    return RetrievalResult(
        query_language=query_language,
        candidate_language=candidate_language,
        mode=mode,
        predictions=[int(p) for p in predictions],
        accuracy=accuracy,
    )


def _record_names(vectors):
    try:
        records = vectors.records if hasattr(vectors, "records") else vectors
        return [r.sentence_id for r in records]
    except (AttributeError, TypeError):
        return None


@dataclass
class RetrievalSuiteResult:
    languages: list[str]
    modes: list[str]
    results: dict  # (mode, query_language, candidate_language) -> RetrievalResult
    mode_averages: dict  # mode -> mean accuracy over ordered pairs

    def accuracy_matrix(self, mode: str) -> list[list[float | None]]:
        """Row = query language, column = candidate language; None on the diagonal."""
        matrix = []
        for qa in self.languages:
            row = []
            for cb in self.languages:
                if qa == cb:
                    row.append(None)
                else:
                    row.append(self.results[(mode, qa, cb)].accuracy)
            matrix.append(row)
        return matrix


def run_retrieval_suite(
    sets,
    modes=("plain",),
    centroids=None,
    projections=None,
) -> RetrievalSuiteResult:
    """Retrieval for every ordered language pair under the requested modes.

    ``sets`` maps language -> sentence vectors (positionally parallel across
    languages).  Centered mode needs one centroid per language; projected
    mode needs one projection per language into a shared pivot space (the
    pivot itself, i.e. the common target language, may be left unmapped).
    """
    languages = list(sets.keys())
    if len(languages) < 2:
        raise ValidationError("retrieval suite needs at least two languages")
    for mode in modes:
        if mode not in MODES:
            raise ConfigError(f"unknown retrieval mode {mode!r}")
    transformed = {}
    for mode in modes:
        if mode == "plain":
            transformed[mode] = {lang: as_matrix(sets[lang]) for lang in languages}
        elif mode == "centered":
            if centroids is None:
                raise ConfigError("centered mode requested but no centroids supplied")
            missing = [l for l in languages if l not in centroids]
            if missing:
                raise ConfigError(f"no centroid for language(s): {', '.join(missing)}")
            transformed[mode] = {
                lang: as_matrix(sets[lang]) - centroids[lang].vector for lang in languages
            }
        else:
            if projections is None:
                raise ConfigError("projected mode requested but no projections supplied")
            pivots = {p.target_language for p in projections.values()}
            unmapped = [l for l in languages if l not in projections and l not in pivots]
            if unmapped:
                raise ConfigError(f"no projection for language(s): {', '.join(unmapped)}")
            transformed[mode] = {
                lang: (
                    apply_projection(projections[lang], as_matrix(sets[lang]))
                    if lang in projections
                    else as_matrix(sets[lang])
                )
                for lang in languages
            }
    results = {}
    mode_averages = {}
    for mode in modes:
        accs = []
        for qa in languages:
            for cb in languages:
                if qa == cb:
                    continue
                res = retrieve(
                    transformed[mode][qa],
                    transformed[mode][cb],
                    query_language=qa,
                    candidate_language=cb,
                    mode=mode,
                )
                results[(mode, qa, cb)] = res
                accs.append(res.accuracy)
        mode_averages[mode] = float(np.mean(accs))
    return RetrievalSuiteResult(
        languages=languages,
        modes=list(modes),
        results=results,
        mode_averages=mode_averages,
    )
