"""Core containers and CSV ingestion.

File formats (UTF-8, comma separated, header row):

- ``embeddings.csv``: ``id,label,e0,...,e{D-1}``
- ``annotations.csv``: ``case_id,rater_id,response,certainty``
- ``probabilities.csv``: ``id,label,p0,...,p{C-1}``
- ``scores.csv``: ``id,method,score``
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

UNKNOWN = "unknown"
CERTAINTY_LEVELS = ("very_low", "low", "medium", "moderate", "high")

NORM_TOL = 1e-6
PROB_RENORM_TOL = 1e-6
PROB_REJECT_TOL = 1e-3


class DataError(ValueError):
    """Invalid input data, optionally tagged with the file and row it came from."""

    def __init__(self, message, path=None, row=None):
        self.path = path
        self.row = row
        where = ""
        if path is not None:
            where = f"{path}"
            if row is not None:
                where += f":{row}"
            where += ": "
        super().__init__(where + message)


def _frozen(a, dtype=float):
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class EmbeddingDataset:
    case_ids: tuple
    labels: np.ndarray
    embeddings: np.ndarray
    class_names: tuple

    def __post_init__(self):
        object.__setattr__(self, "case_ids", tuple(str(c) for c in self.case_ids))
        object.__setattr__(self, "class_names", tuple(str(c) for c in self.class_names))
        object.__setattr__(self, "labels", _frozen(self.labels, dtype=np.int64))
        emb = _frozen(self.embeddings)
        if emb.ndim != 2:
            raise DataError("embeddings must be a 2-D matrix")
        object.__setattr__(self, "embeddings", emb)
        n = len(self.case_ids)
        if len(self.labels) != n or emb.shape[0] != n:
            raise DataError(
                f"size mismatch: {n} ids, {len(self.labels)} labels, {emb.shape[0]} rows"
            )
        if len(set(self.case_ids)) != n:
            raise DataError("duplicate case id")
        if n and (self.labels.min() < 0 or self.labels.max() >= len(self.class_names)):
            raise DataError("label index out of range")
        if len(set(self.class_names)) != len(self.class_names):
            raise DataError("duplicate class name")

    def __len__(self):
        return len(self.case_ids)

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    @property
    def dim(self) -> int:
        return self.embeddings.shape[1]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_classes)

    def label_names(self) -> list[str]:
        return [self.class_names[i] for i in self.labels]

    def index_of(self) -> dict[str, int]:
        return {c: i for i, c in enumerate(self.case_ids)}

    def subset(self, case_ids: Iterable[str]) -> "EmbeddingDataset":
        """Rows for ``case_ids`` in the given order; class names are kept."""
        pos = self.index_of()
        try:
            idx = np.array([pos[c] for c in case_ids], dtype=np.int64)
        except KeyError as e:
            raise DataError(f"case {e.args[0]!r} not in dataset") from None
        return EmbeddingDataset(
            [self.case_ids[i] for i in idx],
            self.labels[idx],
            self.embeddings[idx],
            self.class_names,
        )


@dataclass(frozen=True)
class Annotation:
    case_id: str
    rater_id: str
    response: str
    certainty: str | None = None


@dataclass(frozen=True)
class AnnotationTable:
    records: tuple

    def __post_init__(self):
        records = tuple(self.records)
        object.__setattr__(self, "records", records)
        seen = set()
        for r in records:
            key = (r.case_id, r.rater_id)
            if key in seen:
                raise DataError(f"duplicate (case, rater) pair {key}")
            seen.add(key)
            if r.certainty is not None and r.certainty not in CERTAINTY_LEVELS:
                raise DataError(f"unknown certainty token {r.certainty!r}")

    def __len__(self):
        return len(self.records)

    def case_ids(self) -> list[str]:
        return list(dict.fromkeys(r.case_id for r in self.records))

    def rater_ids(self) -> list[str]:
        return list(dict.fromkeys(r.rater_id for r in self.records))

    def without_rater(self, rater_id: str) -> "AnnotationTable":
        return AnnotationTable([r for r in self.records if r.rater_id != rater_id])

    def for_rater(self, rater_id: str) -> "AnnotationTable":
        return AnnotationTable([r for r in self.records if r.rater_id == rater_id])


@dataclass(frozen=True)
class DifficultyVector:
    method_name: str
    case_ids: tuple
    scores: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "case_ids", tuple(str(c) for c in self.case_ids))
        s = _frozen(self.scores)
        object.__setattr__(self, "scores", s)
        if s.ndim != 1 or len(s) != len(self.case_ids):
            raise DataError(
                f"{self.method_name}: {len(self.case_ids)} ids but {s.size} scores"
            )
        if not np.all(np.isfinite(s)):
            raise DataError(f"{self.method_name}: non-finite score")

    def __len__(self):
        return len(self.case_ids)

    def as_dict(self) -> dict[str, float]:
        return dict(zip(self.case_ids, self.scores.tolist()))

    def aligned_to(self, case_ids: Sequence[str]) -> "DifficultyVector":
        """Reorder (and restrict) to ``case_ids``; every id must be present."""
        pos = {c: i for i, c in enumerate(self.case_ids)}
        missing = [c for c in case_ids if c not in pos]
        if missing:
            raise DataError(
                f"{self.method_name}: {len(missing)} case(s) missing, e.g. {missing[0]!r}"
            )
        idx = [pos[c] for c in case_ids]
        return DifficultyVector(self.method_name, list(case_ids), self.scores[idx])

    def renamed(self, method_name: str) -> "DifficultyVector":
        return DifficultyVector(method_name, self.case_ids, self.scores)


@dataclass(frozen=True)
class ProbabilityMatrix:
    case_ids: tuple
    labels: np.ndarray
    probs: np.ndarray = field(repr=False)

    def __post_init__(self):
        object.__setattr__(self, "case_ids", tuple(str(c) for c in self.case_ids))
        object.__setattr__(self, "labels", _frozen(self.labels, dtype=np.int64))
        p = _frozen(self.probs)
        object.__setattr__(self, "probs", p)
        if p.ndim != 2 or p.shape[0] != len(self.case_ids) or len(self.labels) != p.shape[0]:
            raise DataError("probability matrix shape does not match ids/labels")
        if np.any(p < 0) or np.any(p > 1):
            raise DataError("probabilities must lie in [0, 1]")
        if p.size and np.any(np.abs(p.sum(axis=1) - 1.0) > PROB_RENORM_TOL):
            raise DataError("probability row does not sum to 1")

    @property
    def n_classes(self) -> int:
        return self.probs.shape[1]


def _read_rows(path):
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as f:
        reader = csv.reader(f)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError("empty file", path) from None
        rows = [(lineno, row) for lineno, row in enumerate(reader, start=2) if row]
    return path, header, rows


def _check_numbered_header(header, prefix, path):
    width = len(header) - 2
    expected = [f"{prefix}{i}" for i in range(width)]
    if header[2:] != expected or width < 1:
        raise DataError(
            f"bad header; expected {header[:2]} followed by {prefix}0..{prefix}{{k-1}}", path, 1
        )


def load_embeddings(path, class_names: Sequence[str] | None = None) -> EmbeddingDataset:
    """Read ``id,label,e0..e{D-1}`` into an :class:`EmbeddingDataset`.

    Labels are mapped to indices in first-appearance order, unless
    ``class_names`` fixes the mapping (unseen labels are then an error).
    Rows whose norm drifts from 1 by more than ``NORM_TOL`` are rescaled.
    """
    path, header, rows = _read_rows(path)
    if header[:2] != ["id", "label"]:
        raise DataError("header must start with id,label", path, 1)
    _check_numbered_header(header, "e", path)
    names = list(class_names) if class_names is not None else []
    name_index = {c: i for i, c in enumerate(names)}
    ids, labels, vectors, seen = [], [], [], set()
    for lineno, row in rows:
        if len(row) != len(header):
            raise DataError(f"expected {len(header)} fields, got {len(row)}", path, lineno)
        cid, label = row[0].strip(), row[1].strip()
        if cid in seen:
            raise DataError(f"duplicate id {cid!r}", path, lineno)
        seen.add(cid)
        if not label:
            raise DataError("empty label", path, lineno)
        if label not in name_index:
            if class_names is not None:
                raise DataError(f"unknown label {label!r}", path, lineno)
            name_index[label] = len(names)
            names.append(label)
        try:
            vec = np.array([float(v) for v in row[2:]])
        except ValueError:
            raise DataError("non-numeric coordinate", path, lineno) from None
        if not np.all(np.isfinite(vec)):
            raise DataError("non-finite coordinate", path, lineno)
        norm = math.sqrt(float(vec @ vec))
        if norm == 0.0:
            raise DataError("zero-norm embedding", path, lineno)
        if abs(norm - 1.0) > NORM_TOL:
            vec = vec / norm
        ids.append(cid)
        labels.append(name_index[label])
        vectors.append(vec)
    if not ids:
        raise DataError("no data rows", path)
    return EmbeddingDataset(ids, labels, np.vstack(vectors), names)


def write_embeddings(data: EmbeddingDataset, path) -> None:
    d = data.dim
    with Path(path).open("w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["id", "label", *[f"e{i}" for i in range(d)]])
        for cid, lab, vec in zip(data.case_ids, data.labels, data.embeddings):
            w.writerow([cid, data.class_names[lab], *[repr(float(v)) for v in vec]])


def load_annotations(path, class_names: Sequence[str]) -> AnnotationTable:
    path, header, rows = _read_rows(path)
    if header != ["case_id", "rater_id", "response", "certainty"]:
        raise DataError("header must be case_id,rater_id,response,certainty", path, 1)
    allowed = set(class_names) | {UNKNOWN}
    records, seen = [], set()
    for lineno, row in rows:
        if len(row) != 4:
            raise DataError(f"expected 4 fields, got {len(row)}", path, lineno)
        case_id, rater_id, response, certainty = (v.strip() for v in row)
        if not case_id or not rater_id:
            raise DataError("empty case or rater id", path, lineno)
        if response not in allowed:
            raise DataError(f"unknown response class {response!r}", path, lineno)
        if certainty and certainty not in CERTAINTY_LEVELS:
            raise DataError(f"unknown certainty token {certainty!r}", path, lineno)
        if (case_id, rater_id) in seen:
            raise DataError(f"duplicate (case, rater) pair ({case_id}, {rater_id})", path, lineno)
        seen.add((case_id, rater_id))
        records.append(Annotation(case_id, rater_id, response, certainty or None))
    return AnnotationTable(records)


def write_annotations(table: AnnotationTable, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["case_id", "rater_id", "response", "certainty"])
        for r in table.records:
            w.writerow([r.case_id, r.rater_id, r.response, r.certainty or ""])


def load_probabilities(path) -> ProbabilityMatrix:
    path, header, rows = _read_rows(path)
    if header[:2] != ["id", "label"]:
        raise DataError("header must start with id,label", path, 1)
    _check_numbered_header(header, "p", path)
    n_classes = len(header) - 2
    ids, labels, probs, seen = [], [], [], set()
    for lineno, row in rows:
        if len(row) != len(header):
            raise DataError(f"expected {len(header)} fields, got {len(row)}", path, lineno)
        cid = row[0].strip()
        if cid in seen:
            raise DataError(f"duplicate id {cid!r}", path, lineno)
        seen.add(cid)
        try:
            label = int(row[1])
            p = np.array([float(v) for v in row[2:]])
        except ValueError:
            raise DataError("non-numeric label or probability", path, lineno) from None
        if not 0 <= label < n_classes:
            raise DataError(f"label {label} out of range", path, lineno)
        if not np.all(np.isfinite(p)):
            raise DataError("non-finite probability", path, lineno)
        if np.any(p < 0):
            raise DataError("negative probability", path, lineno)
        total = p.sum()
        if abs(total - 1.0) > PROB_REJECT_TOL:
            raise DataError(f"row sum out of tolerance ({total!r})", path, lineno)
        if total != 1.0:
            p = p / total
        ids.append(cid)
        labels.append(label)
        probs.append(p)
    if not ids:
        raise DataError("no data rows", path)
    return ProbabilityMatrix(ids, labels, np.vstack(probs))


def write_probabilities(pm: ProbabilityMatrix, path) -> None:
    with Path(path).open("w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["id", "label", *[f"p{i}" for i in range(pm.n_classes)]])
        for cid, lab, row in zip(pm.case_ids, pm.labels, pm.probs):
            w.writerow([cid, int(lab), *[repr(float(v)) for v in row]])


def load_labels(path) -> dict[str, str]:
    """``id -> class name`` from any CSV with ``id`` and ``label`` columns."""
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        if reader.fieldnames is None or not {"id", "label"} <= set(reader.fieldnames):
            raise DataError("labels file needs id and label columns", path, 1)
        out = {}
        for lineno, row in enumerate(reader, start=2):
            cid, label = row["id"].strip(), (row["label"] or "").strip()
            if not label:
                raise DataError("empty label", path, lineno)
            if cid in out:
                raise DataError(f"duplicate id {cid!r}", path, lineno)
            out[cid] = label
    return out


def write_scores(vectors: DifficultyVector | Sequence[DifficultyVector], path_or_file) -> None:
    """Write one or more vectors in long ``id,method,score`` form."""
    if isinstance(vectors, DifficultyVector):
        vectors = [vectors]
    own = not hasattr(path_or_file, "write")
    f = Path(path_or_file).open("w", newline="", encoding="utf-8") if own else path_or_file
    try:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["id", "method", "score"])
        for v in vectors:
            for cid, s in zip(v.case_ids, v.scores):
                w.writerow([cid, v.method_name, repr(float(s))])
    finally:
        if own:
            f.close()


def load_scores(path) -> dict[str, DifficultyVector]:
    """Read a ``scores.csv``; returns one vector per method, in file order."""
    path, header, rows = _read_rows(path)
    if header != ["id", "method", "score"]:
        raise DataError("header must be id,method,score", path, 1)
    grouped: dict[str, tuple[list, list]] = {}
    seen = set()
    for lineno, row in rows:
        if len(row) != 3:
            raise DataError(f"expected 3 fields, got {len(row)}", path, lineno)
        cid, method, raw = (v.strip() for v in row)
        if (cid, method) in seen:
            raise DataError(f"duplicate id {cid!r} for method {method!r}", path, lineno)
        seen.add((cid, method))
        try:
            score = float(raw)
        except ValueError:
            raise DataError(f"non-numeric score {raw!r}", path, lineno) from None
        if not math.isfinite(score):
            raise DataError("non-finite score", path, lineno)
        ids, scores = grouped.setdefault(method, ([], []))
        ids.append(cid)
        scores.append(score)
    if not grouped:
        raise DataError("no data rows", path)
    return {m: DifficultyVector(m, ids, scores) for m, (ids, scores) in grouped.items()}
