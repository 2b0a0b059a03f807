"""Synthetic embedding clusters with planted difficulty and simulated raters."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .dataset import (
    CERTAINTY_LEVELS,
    UNKNOWN,
    Annotation,
    AnnotationTable,
    DifficultyVector,
    EmbeddingDataset,
)


@dataclass(frozen=True)
class SynthConfig:
    n_classes: int = 3
    points_per_class: int = 200
    dimension: int = 16
    # per-coordinate noise is N(0, 1 / concentration^2) before re-projection
    concentration: float = 3.0
    rater_count: int = 8
    # probability a rater annotates a given case
    coverage: float = 1.0
    # P(correct) is a decreasing logistic in planted difficulty, from
    # accuracy_easy down to accuracy_hard around accuracy_midpoint
    accuracy_easy: float = 0.98
    accuracy_hard: float = 0.05
    accuracy_midpoint: float = 0.42
    accuracy_width: float = 0.04
    # share of wrong answers given as "unknown"
    unknown_rate: float = 0.1
    certainty_noise: float = 0.6
    seed: int = 0

    def __post_init__(self):
        for name in ("n_classes", "points_per_class", "dimension", "rater_count"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.n_classes < 2:
            raise ValueError("need at least 2 classes")
        if not self.concentration > 0:
            raise ValueError("concentration must be > 0")
        if not 0 < self.coverage <= 1:
            raise ValueError("coverage must be in (0, 1]")
        if not 0 <= self.accuracy_hard <= self.accuracy_easy <= 1:
            raise ValueError("accuracy curve must map [0,1] into [0,1] and decrease")
        if not 0 <= self.unknown_rate <= 1:
            raise ValueError("unknown_rate must be in [0, 1]")
        if not self.accuracy_width > 0:
            raise ValueError("accuracy_width must be > 0")
        if self.certainty_noise < 0:
            raise ValueError("certainty_noise must be >= 0")

    def accuracy(self, difficulty):
        z = (np.asarray(difficulty, dtype=float) - self.accuracy_midpoint) / self.accuracy_width
        return self.accuracy_hard + (self.accuracy_easy - self.accuracy_hard) / (1.0 + np.exp(z))

    def to_dict(self) -> dict:
        return asdict(self)


def planted_difficulty(points: np.ndarray, labels: np.ndarray, directions: np.ndarray) -> np.ndarray:
    """Angle to the own class direction relative to the nearest other one.

    ``theta_own / (theta_own + theta_other)``: 0 on the class direction, 1/2
    on the bisector with the closest rival class, towards 1 beyond it.
    """
    cos = np.clip(points @ directions.T, -1.0, 1.0)
    angles = np.arccos(cos)
    rows = np.arange(len(points))
    own = angles[rows, labels]
    angles[rows, labels] = np.inf
    other = angles.min(axis=1)
    return own / (own + other)


def synth_generate(config: SynthConfig = SynthConfig()):
    """Returns ``(dataset, annotations, planted)``; fully determined by ``config.seed``."""
    rng = np.random.default_rng(config.seed)
    c, k, d = config.n_classes, config.points_per_class, config.dimension
    directions = rng.standard_normal((c, d))
    directions /= np.linalg.norm(directions, axis=1, keepdims=True)
    labels = np.repeat(np.arange(c), k)
    noise = rng.standard_normal((c * k, d)) / config.concentration
    points = directions[labels] + noise
    points /= np.linalg.norm(points, axis=1, keepdims=True)

    width = len(str(c * k - 1))
    case_ids = [f"case{i:0{width}d}" for i in range(c * k)]
    class_names = [f"class{j}" for j in range(c)]
    data = EmbeddingDataset(case_ids, labels, points, class_names)
    difficulty = planted_difficulty(points, labels, directions)
    planted = DifficultyVector("planted", case_ids, difficulty)

    n = c * k
    r = config.rater_count
    annotated = rng.random((n, r)) < config.coverage
    # every case gets at least one rater
    lonely = np.flatnonzero(~annotated.any(axis=1))
    annotated[lonely, rng.integers(0, r, size=lonely.size)] = True
    p_correct = config.accuracy(difficulty)
    correct = rng.random((n, r)) < p_correct[:, None]
    says_unknown = rng.random((n, r)) < config.unknown_rate
    wrong_pick = rng.integers(1, c, size=(n, r))
    level_noise = rng.normal(0.0, config.certainty_noise, size=(n, r))

    top = len(CERTAINTY_LEVELS) - 1
    # raters feel about as sure as they are likely to be right; mistakes feel one level less sure
    levels = np.rint(top * p_correct[:, None] + level_noise) - np.where(correct, 0, 1)
    levels = np.clip(levels, 0, top).astype(int)

    records = []
    for i in range(n):
        for j in range(r):
            if not annotated[i, j]:
                continue
            if correct[i, j]:
                response = class_names[labels[i]]
            elif says_unknown[i, j]:
                response = UNKNOWN
            else:
                response = class_names[(labels[i] + wrong_pick[i, j]) % c]
            records.append(Annotation(case_ids[i], f"rater{j}", response, CERTAINTY_LEVELS[levels[i, j]]))
    return data, AnnotationTable(records), planted
