"""Language-similarity analysis over language centroids.

Centroids are clustered bottom-up under cosine distance with single linkage
(nearest point): the pair of clusters with the smallest minimum pairwise
distance merges first, ties resolved toward the lexicographically smallest
language codes.  Cluster quality against genealogical families is scored by
homogeneity, completeness and V-measure from contingency-table entropies.
"""
from __future__ import annotations

import importlib.resources
from collections import Counter
from dataclasses import dataclass
from math import log

import numpy as np

from .errors import ValidationError
from .geometry import cosine_distance_matrix


@dataclass
class ClusterScore:
    homogeneity: float
    completeness: float
    v_measure: float


@dataclass
class FamilyLabeling:
    """Language code -> genealogical family name."""

    assignments: dict

    def family_of(self, language: str) -> str:
        if language not in self.assignments:
            raise ValidationError(f"no family assignment for language {language!r}")
        return self.assignments[language]


def load_families(path=None) -> FamilyLabeling:
    """Read a `language <tab> family` TSV; defaults to the bundled table."""
    if path is None:
        ref = importlib.resources.files("langneutral").joinpath("data/families.tsv")
        text = ref.read_text(encoding="utf-8")
    else:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    assignments = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ValidationError(f"families line {lineno}: expected 2 tab-separated columns")
        assignments[parts[0].strip()] = parts[1].strip()
    return FamilyLabeling(assignments=assignments)


def filter_min_family_size(
    languages, families: FamilyLabeling, min_size: int = 3
) -> list[str]:
    """Keep only languages whose family has at least min_size members here."""
    counts = Counter(families.family_of(l) for l in languages)
    return [l for l in languages if counts[families.family_of(l)] >= min_size]


def agglomerate(centroids, k: int) -> dict:
    """Single-linkage clustering of centroids down to exactly k clusters.

    Returns language -> cluster id; ids number the clusters by their
    lexicographically smallest member.
    """
    centroids = list(centroids)
    n = len(centroids)
    if not 1 <= k <= n:
        raise ValidationError(f"k must be in [1, {n}], got {k}")
    codes = [c.language for c in centroids]
    if len(set(codes)) != n:
        raise ValidationError("duplicate language codes in centroid list")
    mat = np.stack([np.asarray(c.vector, dtype=np.float64) for c in centroids])
    dist = cosine_distance_matrix(mat, mat)
    # cluster-level single-linkage distances start at the point distances and
    # shrink by min() on merge
    D = dist.copy()
    members: dict[int, set[int]] = {i: {i} for i in range(n)}
    keys = {i: (codes[i],) for i in range(n)}
    while len(members) > k:
        best = None
        active = sorted(members)
        for ai, a in enumerate(active):
            for b in active[ai + 1 :]:
                cand = (D[a, b], tuple(sorted((keys[a], keys[b]))), a, b)
                if best is None or cand[:2] < best[:2]:
                    best = cand
        _, _, a, b = best
        members[a] |= members.pop(b)
        keys[a] = tuple(sorted(keys[a] + keys[b]))
        del keys[b]
        for x in members:
            if x != a:
                d = min(D[a, x], D[b, x])
                D[a, x] = D[x, a] = d
    clusters = sorted(members.values(), key=lambda cl: min(codes[i] for i in cl))
    labels = {}
    for cid, members in enumerate(clusters):
        for i in members:
            labels[codes[i]] = cid
    return labels


def _entropy(counts) -> float:
    total = sum(counts)
    return -sum((c / total) * log(c / total) for c in counts if c > 0)


def v_measure(labels, gold) -> ClusterScore:
    """Homogeneity, completeness and V-measure from natural-log entropies.

    ``labels`` maps item -> cluster id (or is a sequence of cluster ids);
    ``gold`` is a FamilyLabeling, a mapping, or an aligned sequence.
    """
    if isinstance(gold, FamilyLabeling):
        gold = gold.assignments
    if hasattr(labels, "keys"):
        items = sorted(labels.keys())
        cluster_seq = [labels[i] for i in items]
        try:
            class_seq = [gold[i] for i in items]
        except KeyError as exc:
            raise ValidationError(f"no gold family for item {exc}") from exc
    else:
        cluster_seq = list(labels)
        class_seq = list(gold)
        if len(cluster_seq) != len(class_seq):
            raise ValidationError("label and gold sequences differ in length")
    n = len(cluster_seq)
    if n == 0:
        raise ValidationError("v_measure needs at least one item")
    joint = Counter(zip(cluster_seq, class_seq))
    cluster_totals = Counter(cluster_seq)
    class_totals = Counter(class_seq)
    h_class = _entropy(class_totals.values())
    h_cluster = _entropy(cluster_totals.values())
    # H(class | cluster) and H(cluster | class) from the joint table
    h_class_given_cluster = -sum(
        (cnt / n) * log(cnt / cluster_totals[cl]) for (cl, _), cnt in joint.items()
    )
    h_cluster_given_class = -sum(
        (cnt / n) * log(cnt / class_totals[cs]) for (cl, cs), cnt in joint.items()
    )
    homogeneity = 1.0 if h_class == 0.0 else 1.0 - h_class_given_cluster / h_class
    completeness = 1.0 if h_cluster == 0.0 else 1.0 - h_cluster_given_class / h_cluster
    if homogeneity + completeness > 0:
        v = 2.0 * homogeneity * completeness / (homogeneity + completeness)
    else:
        v = 0.0
    return ClusterScore(homogeneity=homogeneity, completeness=completeness, v_measure=v)


def random_baseline(languages, families: FamilyLabeling, k: int, n_seeds: int = 100) -> ClusterScore:
    """Mean scores of seeded uniform random cluster assignments."""
    langs = sorted(languages)
    scores = []
    for seed in range(n_seeds):
        rng = np.random.default_rng(seed)
        labels = {l: int(c) for l, c in zip(langs, rng.integers(0, k, size=len(langs)))}
        s = v_measure(labels, families)
        scores.append((s.homogeneity, s.completeness, s.v_measure))
    arr = np.asarray(scores)
    return ClusterScore(*[float(x) for x in arr.mean(axis=0)])


def project_2d(centroids) -> np.ndarray:
    """Top-2 principal-component coordinates of the centered centroid matrix.

    Sign convention: the largest-magnitude loading of each component is
    positive, so output is deterministic.
    """
    centroids = list(centroids)
    if len(centroids) < 2:
        raise ValidationError("2-D projection needs at least two centroids")
    mat = np.stack([np.asarray(c.vector, dtype=np.float64) for c in centroids])
    centered = mat - mat.mean(axis=0)
    _, _, vt = np.linalg.svd(centered, full_matrices=False)
    comps = vt[:2] if vt.shape[0] >= 2 else np.vstack([vt, np.zeros((2 - vt.shape[0], vt.shape[1]))])
    for row in range(comps.shape[0]):
        lead = np.argmax(np.abs(comps[row]))
        if comps[row, lead] < 0:
            comps[row] = -comps[row]
    return centered @ comps.T
