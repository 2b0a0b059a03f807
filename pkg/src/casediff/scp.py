"""Sample classification power.

For an anchor sample of class ``c`` every other sample is ranked by cosine
similarity to the anchor. Labelling the ``k`` nearest as ``c`` and sweeping
``k`` traces a ROC curve; class-frequency weights make it robust to
imbalance. The score is ``1 - AUC`` so that larger means harder.

Cost is O(N^2 log N) over a dataset (one sort per anchor).
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dataset import DataError, DifficultyVector, EmbeddingDataset


@dataclass(frozen=True)
class NeighborRanking:
    anchor: int
    ordered_neighbors: np.ndarray
    similarities: np.ndarray


@dataclass(frozen=True)
class ClassWeights:
    weights: np.ndarray

    @classmethod
    def from_counts(cls, counts) -> "ClassWeights":
        counts = np.asarray(counts, dtype=float)
        if np.any(counts <= 0):
            raise DataError("class weights need positive class counts")
        return cls(1.0 / counts)

    @classmethod
    def from_labels(cls, labels, n_classes: int) -> "ClassWeights":
        return cls.from_counts(np.bincount(np.asarray(labels), minlength=n_classes))

    @classmethod
    def uniform(cls, n_classes: int) -> "ClassWeights":
        return cls(np.ones(n_classes))


def rank_neighbors(data: EmbeddingDataset, anchor: int) -> NeighborRanking:
    """All samples but the anchor, by decreasing cosine similarity.

    Equal similarities are ordered by ascending case index.
    """
    n = len(data)
    if n < 2:
        raise DataError("ranking neighbours needs at least 2 samples")
    if not 0 <= anchor < n:
        raise IndexError(f"anchor {anchor} out of range")
    emb = data.embeddings
    a = emb[anchor]
    norms = np.linalg.norm(emb, axis=1)
    sims = np.clip((emb @ a) / (norms * norms[anchor]), -1.0, 1.0)
    others = np.delete(np.arange(n), anchor)
    sims = sims[others]
    order = np.lexsort((others, -sims))
    return NeighborRanking(anchor, others[order], sims[order])


def weighted_roc_auc(ranking: NeighborRanking, labels, anchor_class: int, weights: ClassWeights) -> float:
    """Weighted area under the ROC curve of the neighbour sweep.

    Neighbours of ``anchor_class`` are positives. Each neighbour carries the
    weight of its class. Neighbours with identical similarity enter the sweep
    together, giving a diagonal segment, so the area equals the weighted
    probability that a positive outranks a negative with ties counted 1/2.
    """
    lab = np.asarray(labels)[ranking.ordered_neighbors]
    w = weights.weights[lab]
    pos = lab == anchor_class
    pos_w = np.where(pos, w, 0.0)
    neg_w = np.where(pos, 0.0, w)
    total_pos, total_neg = pos_w.sum(), neg_w.sum()
    if not pos.any() or pos.all():
        raise DataError(
            f"anchor {ranking.anchor}: ROC needs at least one positive and one negative neighbour"
        )
    sims = ranking.similarities
    starts = np.flatnonzero(np.r_[True, sims[1:] != sims[:-1]])
    group_pos = np.add.reduceat(pos_w, starts)
    group_neg = np.add.reduceat(neg_w, starts)
    tp_before = np.cumsum(group_pos) - group_pos
    area = np.sum(group_neg * (tp_before + 0.5 * group_pos))
    return float(area / (total_pos * total_neg))


def _scp_block(data, anchors, weights):
    out = np.empty(len(anchors))
    for j, i in enumerate(anchors):
        ranking = rank_neighbors(data, int(i))
        out[j] = 1.0 - weighted_roc_auc(ranking, data.labels, int(data.labels[i]), weights)
    return out


def sample_classification_power(
    data: EmbeddingDataset,
    weights: ClassWeights | None = None,
    workers: int = 1,
) -> DifficultyVector:
    """Difficulty ``1 - AUC`` for every sample of ``data``.

    Class weights default to the inverse class counts of ``data`` itself.
    Results do not depend on ``workers``.
    """
    counts = data.class_counts()
    present = counts[counts > 0]
    if np.any(present < 2):
        bad = data.class_names[int(np.flatnonzero((counts > 0) & (counts < 2))[0])]
        raise DataError(f"class {bad!r} has a single sample; needs at least 2")
    if np.count_nonzero(counts) < 2:
        raise DataError("sample classification power needs at least 2 classes")
    if weights is None:
        weights = ClassWeights(np.where(counts > 0, 1.0 / np.maximum(counts, 1), 0.0))
    n = len(data)
    if workers <= 1:
        scores = _scp_block(data, np.arange(n), weights)
    else:
        blocks = np.array_split(np.arange(n), workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda b: _scp_block(data, b, weights), blocks))
        scores = np.concatenate(parts)
    return DifficultyVector("scp", data.case_ids, scores)
