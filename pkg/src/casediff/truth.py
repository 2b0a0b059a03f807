"""Ground-truth difficulty from annotator panels.

Per case, ``mu_correct`` is the fraction of raters naming the true class
(``"unknown"`` counts as wrong) and ``mu_certainty`` the mean self-rated
certainty. Difficulty is ``1 - mu_correct`` or, with certainty,
``1 - mu_correct * mu_certainty``.
"""
from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .dataset import CERTAINTY_LEVELS, UNKNOWN, AnnotationTable, DataError, DifficultyVector
from .stats import UndefinedTauError, kendall_tau

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class CertaintyScale:
    values: tuple = (0.0, 0.25, 0.5, 0.75, 1.0)

    def __post_init__(self):
        v = tuple(float(x) for x in self.values)
        object.__setattr__(self, "values", v)
        if len(v) != len(CERTAINTY_LEVELS):
            raise ValueError(f"certainty scale needs {len(CERTAINTY_LEVELS)} values")
        if v[0] != 0.0 or v[-1] != 1.0:
            raise ValueError("certainty scale must start at 0 and end at 1")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("certainty scale must be strictly increasing")

    @classmethod
    def parse(cls, text: str) -> "CertaintyScale":
        return cls(tuple(float(t) for t in text.split(",")))

    def __getitem__(self, level: str) -> float:
        return self.values[CERTAINTY_LEVELS.index(level)]


@dataclass(frozen=True)
class CaseTruth:
    case_id: str
    n_raters: int
    mu_correct: float
    mu_certainty: float | None
    difficulty: float


def case_truths(
    table: AnnotationTable,
    true_labels: Mapping[str, str],
    scale: CertaintyScale | None = None,
    use_certainty: bool = False,
    unknown_certainty: bool = True,
) -> list[CaseTruth]:
    """Per-case aggregation in the order of ``true_labels``.

    With ``unknown_certainty`` off, "unknown" answers are left out of the
    certainty mean (they still count as incorrect).
    """
    scale = scale or CertaintyScale()
    by_case = defaultdict(list)
    for r in table.records:
        if r.case_id not in true_labels:
            raise DataError(f"no true label for case {r.case_id!r}")
        by_case[r.case_id].append(r)
    out = []
    for case_id, label in true_labels.items():
        recs = by_case.get(case_id)
        if not recs:
            raise DataError(f"case {case_id!r} has zero annotations")
        n = len(recs)
        mu_correct = sum(r.response == label for r in recs) / n
        mu_certainty = None
        difficulty = 1.0 - mu_correct
        if use_certainty:
            levels = []
            for r in recs:
                if r.response == UNKNOWN and not unknown_certainty:
                    continue
                if r.certainty is None:
                    raise DataError(
                        f"missing certainty for case {case_id!r}, rater {r.rater_id!r}"
                    )
                levels.append(scale[r.certainty])
            mu_certainty = float(np.mean(levels)) if levels else 0.0
            difficulty = 1.0 - mu_correct * mu_certainty
        out.append(CaseTruth(case_id, n, mu_correct, mu_certainty, difficulty))
    return out


def aggregate_truth(
    table: AnnotationTable,
    true_labels: Mapping[str, str],
    scale: CertaintyScale | None = None,
    use_certainty: bool = False,
    unknown_certainty: bool = True,
) -> DifficultyVector:
    truths = case_truths(table, true_labels, scale, use_certainty, unknown_certainty)
    return DifficultyVector(
        "truth", [t.case_id for t in truths], [t.difficulty for t in truths]
    )


@dataclass
class RaterResult:
    rater_id: str
    n_cases: int
    tau: float | None
    skipped: str | None = None


@dataclass
class LoaoReport:
    use_certainty: bool
    held_out_score: str
    raters: list = field(default_factory=list)

    @property
    def taus(self) -> list[float]:
        return [r.tau for r in self.raters if r.tau is not None]

    @property
    def mean_tau(self) -> float | None:
        t = self.taus
        return float(np.mean(t)) if t else None

    def to_dict(self) -> dict:
        return {
            "use_certainty": self.use_certainty,
            "held_out_score": self.held_out_score,
            "mean_tau": self.mean_tau,
            "raters": [
                {"rater_id": r.rater_id, "n_cases": r.n_cases, "tau": r.tau, "skipped": r.skipped}
                for r in self.raters
            ],
        }


def leave_one_annotator_out(
    table: AnnotationTable,
    true_labels: Mapping[str, str],
    scale: CertaintyScale | None = None,
    use_certainty: bool = False,
    unknown_certainty: bool = True,
) -> LoaoReport:
    """Correlate each rater with the panel formed by everyone else.

    For rater ``r`` the remaining raters are aggregated on the cases ``r``
    annotated (cases nobody else saw are dropped). ``r``'s own per-case
    difficulty is ``1 - correct`` or, with certainty, ``1 - correct * certainty``.
    Raters with fewer than two shared cases, or whose vector is constant, are
    skipped and listed with the reason.
    """
    scale = scale or CertaintyScale()
    raters = table.rater_ids()
    if len(raters) < 2:
        raise DataError("leave-one-annotator-out needs at least 2 raters")
    report = LoaoReport(
        use_certainty,
        "1 - correct * certainty" if use_certainty else "1 - correct",
    )
    for rater in raters:
        own = table.for_rater(rater)
        rest = table.without_rater(rater)
        rest_cases = set(rest.case_ids())
        shared = [r for r in own.records if r.case_id in rest_cases]
        if len(shared) < 2:
            log.warning("rater %s shares %d case(s) with the panel; skipped", rater, len(shared))
            report.raters.append(RaterResult(rater, len(shared), None, "fewer than 2 shared cases"))
            continue
        labels = {r.case_id: true_labels[r.case_id] for r in shared}
        panel = aggregate_truth(
            AnnotationTable([r for r in rest.records if r.case_id in labels]),
            labels, scale, use_certainty, unknown_certainty,
        )
        own_scores = []
        for r in shared:
            correct = float(r.response == labels[r.case_id])
            if use_certainty:
                if r.certainty is None:
                    if r.response == UNKNOWN and not unknown_certainty:
                        own_scores.append(1.0)
                        continue
                    raise DataError(f"missing certainty for case {r.case_id!r}, rater {rater!r}")
                correct *= scale[r.certainty]
            own_scores.append(1.0 - correct)
        try:
            tau = kendall_tau(panel.scores, own_scores).tau
        except UndefinedTauError:
            log.warning("rater %s: constant difficulty vector; skipped", rater)
            report.raters.append(RaterResult(rater, len(shared), None, "constant scores, tau undefined"))
            continue
        report.raters.append(RaterResult(rater, len(shared), tau))
    return report


def true_label_names(case_ids: Sequence[str], labels: Mapping[str, str]) -> dict[str, str]:
    """Restrict a label mapping to ``case_ids`` (keeping their order)."""
    missing = [c for c in case_ids if c not in labels]
    if missing:
        raise DataError(f"no true label for case {missing[0]!r}")
    return {c: labels[c] for c in case_ids}
