"""Centroid-based difficulty scores in cosine-similarity space."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import DataError, DifficultyVector, EmbeddingDataset

DEGENERATE_MEAN = 1e-12
# Centroids shorter than this are treated as the zero vector.
DEGENERATE_CENTROID = 1e-12


@dataclass(frozen=True)
class CentroidSet:
    """One (unnormalized) mean embedding per class of a reference set."""

    centroids: np.ndarray
    class_names: tuple
    class_counts: np.ndarray
    source: str = "reference"

    def index_for(self, class_names) -> np.ndarray:
        """Map another dataset's class names onto rows of ``centroids``."""
        pos = {c: i for i, c in enumerate(self.class_names)}
        missing = [c for c in class_names if c not in pos]
        if missing:
            raise DataError(f"label {missing[0]!r} missing from centroid set ({self.source})")
        return np.array([pos[c] for c in class_names], dtype=np.int64)


def compute_centroids(reference: EmbeddingDataset, source: str = "reference") -> CentroidSet:
    """Arithmetic mean of the embeddings of every class.

    The mean is not renormalized: cosine similarity ignores positive scale.
    """
    counts = reference.class_counts()
    empty = np.flatnonzero(counts == 0)
    if empty.size:
        raise DataError(f"empty class {reference.class_names[empty[0]]!r} in {source}")
    sums = np.zeros((reference.n_classes, reference.dim))
    np.add.at(sums, reference.labels, reference.embeddings)
    centroids = sums / counts[:, None]
    norms = np.linalg.norm(centroids, axis=1)
    bad = np.flatnonzero(norms < DEGENERATE_CENTROID)
    if bad.size:
        raise DataError(f"degenerate centroid for class {reference.class_names[bad[0]]!r}")
    centroids.setflags(write=False)
    counts.setflags(write=False)
    return CentroidSet(centroids, reference.class_names, counts, source)


def cosine_similarity(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity of a zero vector")
    return float(np.clip(a @ b / (na * nb), -1.0, 1.0))


def similarity_matrix(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Pairwise cosine similarities between rows of ``x`` and rows of ``y``."""
    nx = np.linalg.norm(x, axis=1)
    ny = np.linalg.norm(y, axis=1)
    if np.any(nx == 0) or np.any(ny == 0):
        raise ValueError("cosine similarity of a zero vector")
    return np.clip((x @ y.T) / np.outer(nx, ny), -1.0, 1.0)


def _centroid_similarities(data: EmbeddingDataset, centroids: CentroidSet):
    own = centroids.index_for(data.class_names)[data.labels]
    sims = similarity_matrix(data.embeddings, centroids.centroids)
    return sims, own


def inverse_similarity(data: EmbeddingDataset, centroids: CentroidSet) -> DifficultyVector:
    """One minus the cosine similarity to the sample's own class centroid."""
    sims, own = _centroid_similarities(data, centroids)
    scores = 1.0 - sims[np.arange(len(data)), own]
    return DifficultyVector("inv_sim", data.case_ids, scores)


def softmax(z: np.ndarray, axis: int = -1) -> np.ndarray:
    z = z - z.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


def inverse_softmax_similarity(data: EmbeddingDataset, centroids: CentroidSet) -> DifficultyVector:
    """One minus the softmax weight (over all centroids) of the true class.

    Temperature is 1 on the raw cosine similarities.
    """
    if len(centroids.class_names) < 2:
        raise DataError("inverse softmax of similarity needs at least 2 classes")
    sims, own = _centroid_similarities(data, centroids)
    p = softmax(sims, axis=1)
    scores = 1.0 - p[np.arange(len(data)), own]
    return DifficultyVector("inv_softmax", data.case_ids, scores)


def normalize_per_class(scores: DifficultyVector, labels, method_name: str | None = None) -> DifficultyVector:
    """Divide every score by the mean score of its class.

    Afterwards every class has mean 1. Classes whose mean is not strictly
    positive (or below ``DEGENERATE_MEAN``) cannot be normalized.
    """
    labels = np.asarray(labels)
    if labels.shape != scores.scores.shape:
        raise DataError("labels must align with scores")
    out = np.empty_like(scores.scores)
    for c in np.unique(labels):
        mask = labels == c
        mean = scores.scores[mask].mean()
        if not mean > DEGENERATE_MEAN:
            raise DataError(f"degenerate class mean {mean!r} for class {c!r}")
        out[mask] = scores.scores[mask] / mean
    name = method_name or f"{scores.method_name}_norm"
    return DifficultyVector(name, scores.case_ids, out)
