"""Word alignment as a minimum-weight edge cover over cosine costs.

Every source and target word must be covered by at least one link.  The
cover is found exactly by reduction to rectangular assignment: subtract
each row's and column's cheapest incident cost, solve an assignment on the
clipped reduced matrix (a match is kept only when its reduced cost is
<= 0), then attach every still-uncovered vertex through its cheapest edge.
An exhaustive enumeration oracle in the test suite enforces optimality for
all shapes up to 4x4.

A positional distortion penalty can be added to each edge.  ``inverse`` is
the literal 1/d form (largest for adjacent positions), ``linear`` grows
with distance; d = 0 always contributes 0.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linear_sum_assignment

from .embstore import TokenEmbeddingMatrix, pool_words
from .errors import ConfigError, ValidationError
from .geometry import LinearProjection, cosine_distance_matrix, fit_projection

PENALTY_KINDS = ("none", "inverse", "linear")


def distortion_penalties(rows: int, cols: int, kind: str) -> np.ndarray:
    """Unweighted penalty p(d) for every (i, j), d = |i - j|."""
    if kind not in PENALTY_KINDS:
        raise ConfigError(f"unknown penalty kind {kind!r}")
    d = np.abs(np.arange(rows)[:, None] - np.arange(cols)[None, :]).astype(np.float64)
    if kind == "none":
        return np.zeros((rows, cols))
    if kind == "inverse":
        out = np.zeros((rows, cols))
        nz = d > 0
        out[nz] = 1.0 / d[nz]
        return out
    return d / float(max(rows, cols))


@dataclass
class CostMatrix:
    """Alignment edge costs: cosine distance plus weighted distortion penalty."""

    costs: np.ndarray  # (rows, cols) float64
    distortion_weight: float = 0.0
    penalty_kind: str = "none"

    def __post_init__(self):
        self.costs = np.asarray(self.costs, dtype=np.float64)

    @property
    def rows(self) -> int:
        return self.costs.shape[0]

    @property
    def cols(self) -> int:
        return self.costs.shape[1]

    def validate(self):
        if self.costs.ndim != 2 or self.rows < 1 or self.cols < 1:
            raise ValidationError(f"cost matrix must be 2-D and non-empty, got {self.costs.shape}")
        if not np.all(np.isfinite(self.costs)):
            raise ValidationError("non-finite cost entry")
        if self.distortion_weight < 0:
            raise ValidationError("distortion weight must be non-negative")


def build_cost_matrix(src_words, tgt_words, weight: float = 0.0, kind: str = "none") -> CostMatrix:
    """Pairwise word costs for one sentence pair."""
    src = np.asarray(src_words, dtype=np.float64)
    tgt = np.asarray(tgt_words, dtype=np.float64)
    if src.ndim != 2 or tgt.ndim != 2 or src.shape[0] == 0 or tgt.shape[0] == 0:
        raise ValidationError("both word lists must be non-empty 2-D arrays")
    if weight < 0:
        raise ValidationError("distortion weight must be non-negative")
    costs = cosine_distance_matrix(src, tgt)
    if weight != 0.0:
        costs = costs + weight * distortion_penalties(src.shape[0], tgt.shape[0], kind)
    else:
        # still validates the kind name even when the weight silences it
        distortion_penalties(1, 1, kind)
    cm = CostMatrix(costs=costs, distortion_weight=float(weight), penalty_kind=kind)
    cm.validate()
    return cm


@dataclass
class AlignmentLinkSet:
    """Predicted links; always a full edge cover of both sides."""

    links: set = field(default_factory=set)

    @property
    def sorted_links(self) -> list[tuple[int, int]]:
        return sorted(self.links)

    def covers(self, rows: int, cols: int) -> bool:
        return {i for i, _ in self.links} == set(range(rows)) and {
            j for _, j in self.links
        } == set(range(cols))

    def total_cost(self, costs: np.ndarray) -> float:
        return float(sum(costs[i, j] for i, j in self.links))


def min_edge_cover(cost_matrix) -> AlignmentLinkSet:
    """Exact minimum-weight edge cover of a complete bipartite cost matrix.

    Links are reported in lexicographic order; the reduction is deterministic
    for a fixed input.
    """
    if isinstance(cost_matrix, CostMatrix):
        cost_matrix.validate()
        costs = cost_matrix.costs
    else:
        costs = np.asarray(cost_matrix, dtype=np.float64)
        CostMatrix(costs=costs).validate()
    n_rows, n_cols = costs.shape
    delta_row = costs.min(axis=1)
    delta_col = costs.min(axis=0)
    reduced = costs - delta_row[:, None] - delta_col[None, :]
    ri, ci = linear_sum_assignment(np.minimum(reduced, 0.0))
    links = {(int(i), int(j)) for i, j in zip(ri, ci) if reduced[i, j] <= 0.0}
    covered_rows = {i for i, _ in links}
    covered_cols = {j for _, j in links}
    for i in range(n_rows):
        if i not in covered_rows:
            links.add((i, int(np.argmin(costs[i]))))
    for j in range(n_cols):
        if j not in covered_cols:
            links.add((int(np.argmin(costs[:, j])), j))
    result = AlignmentLinkSet(links=links)
    assert result.covers(n_rows, n_cols), "edge-cover construction left a vertex uncovered"
    return result


def align_pair(
    src: TokenEmbeddingMatrix,
    tgt: TokenEmbeddingMatrix,
    weight: float = 0.0,
    kind: str = "none",
    projection: LinearProjection | None = None,
) -> AlignmentLinkSet:
    """pool_words -> build_cost_matrix -> min_edge_cover for one sentence pair.

    When a projection is given it is applied to the source word vectors
    before costs are computed.
    """
    src_words = np.stack(pool_words(src))
    tgt_words = np.stack(pool_words(tgt))
    if projection is not None:
        src_words = src_words @ projection.matrix.T
        if projection.bias is not None:
            src_words = src_words + projection.bias
    return min_edge_cover(build_cost_matrix(src_words, tgt_words, weight, kind))


@dataclass
class GoldAlignment:
    """Gold sure/possible links; sure is folded into possible on construction."""

    sure: set
    possible: set = field(default_factory=set)

    def __post_init__(self):
        self.sure = {(int(i), int(j)) for i, j in self.sure}
        self.possible = {(int(i), int(j)) for i, j in self.possible} | self.sure

    def validate(self):
        if not self.sure:
            raise ValidationError("gold alignment has an empty sure set")


def evaluate_f1(pred: AlignmentLinkSet, gold: GoldAlignment) -> tuple[float, float, float]:
    """Precision against possible, recall against sure, and their harmonic mean."""
    gold.validate()
    links = pred.links if isinstance(pred, AlignmentLinkSet) else set(pred)
    if not links:
        return 0.0, 0.0, 0.0
    precision = len(links & gold.possible) / len(links)
    recall = len(links & gold.sure) / len(gold.sure)
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1


def evaluate_corpus(preds, golds) -> dict:
    """Per-pair and macro-averaged P/R/F1 over a corpus of sentence pairs."""
    if len(preds) != len(golds):
        raise ValidationError(f"prediction/gold count mismatch: {len(preds)} vs {len(golds)}")
    per_pair = [evaluate_f1(p, g) for p, g in zip(preds, golds)]
    arr = np.asarray(per_pair, dtype=np.float64)
    return {
        "per_pair": per_pair,
        "precision": float(arr[:, 0].mean()),
        "recall": float(arr[:, 1].mean()),
        "f1": float(arr[:, 2].mean()),
    }


def tune_distortion_weight(dev_pairs, dev_golds, grid, kind: str = "inverse") -> float:
    """Grid value maximizing mean F1 on the dev corpus; ties pick the smallest."""
    grid = list(grid)
    if not grid:
        raise ConfigError("empty distortion-weight grid")
    if not dev_pairs:
        raise ValidationError("empty dev corpus")
    best_weight = None
    best_f1 = -1.0
    for weight in sorted(grid):
        preds = [align_pair(s, t, weight=weight, kind=kind) for s, t in dev_pairs]
        f1 = evaluate_corpus(preds, dev_golds)["f1"]
        if f1 > best_f1:
            best_f1 = f1
            best_weight = weight
    return float(best_weight)


# ---------------------------------------------------------------------------
# EM refinement: alternate aligning and refitting a source->target projection
# ---------------------------------------------------------------------------


@dataclass
class EmAlignResult:
    projection: LinearProjection
    alignments: list[AlignmentLinkSet]
    round_mean_costs: list[float]
    fit_warnings: list[str] = field(default_factory=list)


def em_projection_align(
    pairs,
    rounds: int,
    weight: float = 0.0,
    kind: str = "none",
    with_bias: bool = False,
) -> EmAlignResult:
    """Alternately align word pairs and refit a linear source->target map.

    Round 1 aligns with the identity; each subsequent round applies the last
    fitted projection to the source words before aligning.  A degenerate fit
    keeps the previous round's projection and records a warning.
    """
    if rounds < 1:
        raise ValidationError("rounds must be >= 1")
    if not pairs:
        raise ValidationError("empty pair corpus")
    word_pairs = [(np.stack(pool_words(s)), np.stack(pool_words(t))) for s, t in pairs]
    dim = word_pairs[0][0].shape[1]
    proj = LinearProjection(matrix=np.eye(dim), source_language="", target_language="")
    alignments: list[AlignmentLinkSet] = []
    round_costs: list[float] = []
    warnings: list[str] = []
    for rnd in range(rounds):
        alignments = []
        all_costs = []
        src_rows = []
        tgt_rows = []
        for src_words, tgt_words in word_pairs:
            proj_src = src_words @ proj.matrix.T
            if proj.bias is not None:
                proj_src = proj_src + proj.bias
            cm = build_cost_matrix(proj_src, tgt_words, weight, kind)
            link_set = min_edge_cover(cm)
            alignments.append(link_set)
            for i, j in link_set.links:
                all_costs.append(cm.costs[i, j])
                src_rows.append(src_words[i])
                tgt_rows.append(tgt_words[j])
        round_costs.append(float(np.mean(all_costs)))
        if rnd == rounds - 1:
            break
        try:
            refit = fit_projection(np.stack(src_rows), np.stack(tgt_rows), with_bias=with_bias)
        except ValidationError as exc:
            warnings.append(f"round {rnd + 1}: degenerate fit ({exc}); keeping projection")
            continue
        if refit.regularized:
            warnings.append(f"round {rnd + 1}: rank-deficient fit, regularized")
        proj = refit
    return EmAlignResult(
        projection=proj,
        alignments=alignments,
        round_mean_costs=round_costs,
        fit_warnings=warnings,
    )


# ---------------------------------------------------------------------------
# Pharaoh text format
# ---------------------------------------------------------------------------


def format_links(link_set: AlignmentLinkSet) -> str:
    """One line of space-separated i-j pairs in lexicographic order."""
    return " ".join(f"{i}-{j}" for i, j in link_set.sorted_links)


def parse_gold_line(line: str, one_based: bool = False) -> GoldAlignment:
    """Parse `i-j` (sure) and `i?j` (possible) pairs from one line."""
    sure = set()
    possible = set()
    offset = 1 if one_based else 0
    for token in line.split():
        if "?" in token:
            i, j = token.split("?")
            possible.add((int(i) - offset, int(j) - offset))
        elif "-" in token:
            i, j = token.split("-")
            sure.add((int(i) - offset, int(j) - offset))
        else:
            raise ValidationError(f"bad alignment token {token!r}")
    return GoldAlignment(sure=sure, possible=possible)


def read_gold_file(path, one_based: bool = False) -> list[GoldAlignment]:
    with open(path, "r", encoding="utf-8") as fh:
        return [parse_gold_line(line, one_based=one_based) for line in fh.read().splitlines()]


def read_links_file(path) -> list[AlignmentLinkSet]:
    """Read predicted links (all `i-j` pairs; `?` pairs are accepted too)."""
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh.read().splitlines():
            links = set()
            for token in line.split():
                sep = "?" if "?" in token else "-"
                i, j = token.split(sep)
                links.add((int(i), int(j)))
            out.append(AlignmentLinkSet(links=links))
    return out
