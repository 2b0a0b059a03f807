"""Difficulty baselines computed from classifier softmax outputs."""
import numpy as np

from .dataset import DataError, DifficultyVector, ProbabilityMatrix


def classification_uncertainty(probs: ProbabilityMatrix) -> DifficultyVector:
    """``1 - max_j p_j``."""
    return DifficultyVector("uncertainty", probs.case_ids, 1.0 - probs.probs.max(axis=1))


def entropy_score(probs: ProbabilityMatrix) -> DifficultyVector:
    """Shannon entropy in nats, with ``0 log 0 = 0``."""
    p = probs.probs
    logs = np.log(np.where(p > 0, p, 1.0))
    return DifficultyVector("entropy", probs.case_ids, -(p * logs).sum(axis=1))


def classification_margin(probs: ProbabilityMatrix) -> DifficultyVector:
    """Second-highest minus highest probability.

    Kept with that sign, so values lie in [-1, 0] and larger means harder.
    """
    if probs.n_classes < 2:
        raise DataError("classification margin needs at least 2 classes")
    top2 = np.sort(probs.probs, axis=1)[:, -2:]
    return DifficultyVector("margin", probs.case_ids, top2[:, 0] - top2[:, 1])


def self_taught_score(probs: ProbabilityMatrix) -> DifficultyVector:
    """``1 - p_label``, the probability mass missing from the true class."""
    labels = probs.labels
    if np.any(labels < 0) or np.any(labels >= probs.n_classes):
        raise DataError("label index out of range")
    return DifficultyVector(
        "self_taught", probs.case_ids, 1.0 - probs.probs[np.arange(len(labels)), labels]
    )


BASELINES = {
    "uncertainty": classification_uncertainty,
    "entropy": entropy_score,
    "margin": classification_margin,
    "self_taught": self_taught_score,
}
