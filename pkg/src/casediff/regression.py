"""Supervised difficulty: extremely randomized trees with out-of-fold prediction.

Trees follow the classic extra-trees recipe: no bootstrap, every feature is
a candidate at every node, one uniform random cut per non-constant feature,
and the cut with the largest variance reduction wins (lowest feature index on
ties). Each tree draws from its own random stream keyed by the master seed
and the tree index, so fitting on any number of threads is bit-identical.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from . import _rng
from .dataset import DataError, DifficultyVector, EmbeddingDataset


@dataclass(frozen=True)
class ExtraTreesParams:
    n_trees: int = 500
    min_samples_split: int = 10
    # None means every feature is a candidate at each node
    max_features: int | None = None
    min_samples_leaf: int = 1

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValueError("n_trees must be >= 1")
        if self.min_samples_split < 2:
            raise ValueError("min_samples_split must be >= 2")
        if self.max_features is not None or self.min_samples_leaf != 1:
            raise NotImplementedError("only max_features=None and min_samples_leaf=1 are supported")


@dataclass(frozen=True)
class RegressionTree:
    """Flat node arrays; ``feature == -1`` marks a leaf."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray
    n_samples: np.ndarray

    @property
    def node_count(self) -> int:
        return len(self.feature)

    @property
    def is_leaf(self) -> np.ndarray:
        return self.feature < 0


@dataclass(frozen=True)
class TreeEnsembleModel:
    trees: tuple
    params: ExtraTreesParams
    seed: int
    feature_count: int
    target_range: tuple = field(default=(0.0, 0.0))


@dataclass(frozen=True)
class FeatureMatrix:
    rows: np.ndarray
    n_label_columns: int = 0

    def __post_init__(self):
        if self.n_label_columns:
            block = self.rows[:, -self.n_label_columns:]
            if not (np.all((block == 0) | (block == 1)) and np.all(block.sum(axis=1) == 1)):
                raise DataError("label block must be one-hot")


def build_features(data: EmbeddingDataset, use_label: bool) -> FeatureMatrix:
    """Embeddings, optionally followed by a one-hot encoding of the class."""
    if not use_label:
        return FeatureMatrix(np.array(data.embeddings, dtype=float))
    onehot = np.zeros((len(data), data.n_classes))
    onehot[np.arange(len(data)), data.labels] = 1.0
    return FeatureMatrix(np.hstack([data.embeddings, onehot]), data.n_classes)


@njit(cache=True, nogil=True)
def _grow_tree(X, y, min_split, seed, tree_index):
    n, d = X.shape
    cap = 2 * n + 1
    feature = np.full(cap, -1, dtype=np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, dtype=np.int64)
    right = np.full(cap, -1, dtype=np.int64)
    value = np.zeros(cap)
    count = np.zeros(cap, dtype=np.int64)
    idx = np.arange(n)
    buf = np.empty(n, dtype=np.int64)
    stack_node = np.empty(cap, dtype=np.int64)
    stack_lo = np.empty(cap, dtype=np.int64)
    stack_hi = np.empty(cap, dtype=np.int64)
    state = _rng.stream_state(seed, tree_index)

    n_nodes = 1
    top = 0
    stack_node[0] = 0
    stack_lo[0] = 0
    stack_hi[0] = n
    while top >= 0:
        node = stack_node[top]
        lo = stack_lo[top]
        hi = stack_hi[top]
        top -= 1
        m = hi - lo
        count[node] = m

        ymin = y[idx[lo]]
        ymax = ymin
        for k in range(lo + 1, hi):
            v = y[idx[k]]
            if v < ymin:
                ymin = v
            elif v > ymax:
                ymax = v
        # offset from the minimum keeps constant leaves exact
        acc = 0.0
        for k in range(lo, hi):
            acc += y[idx[k]] - ymin
        mean = ymin + acc / m
        value[node] = min(max(mean, ymin), ymax)
        if m < min_split or ymin == ymax:
            continue

        total = 0.0
        for k in range(lo, hi):
            total += y[idx[k]]
        best_score = -np.inf
        best_f = -1
        best_cut = 0.0
        for f in range(d):
            fmin = X[idx[lo], f]
            fmax = fmin
            for k in range(lo + 1, hi):
                v = X[idx[k], f]
                if v < fmin:
                    fmin = v
                elif v > fmax:
                    fmax = v
            if not fmax > fmin:
                continue
            cut = fmin + _rng.uniform_open(state) * (fmax - fmin)
            if cut >= fmax:
                cut = fmin
            s_left = 0.0
            n_left = 0
            for k in range(lo, hi):
                if X[idx[k], f] <= cut:
                    s_left += y[idx[k]]
                    n_left += 1
            s_right = total - s_left
            n_right = m - n_left
            # n * (variance reduction) up to a node constant
            score = s_left * s_left / n_left + s_right * s_right / n_right
            if score > best_score:
                best_score = score
                best_f = f
                best_cut = cut
        if best_f < 0:
            continue

        # stable partition of idx[lo:hi]
        a = lo
        b = 0
        for k in range(lo, hi):
            i = idx[k]
            if X[i, best_f] <= best_cut:
                idx[a] = i
                a += 1
            else:
                buf[b] = i
                b += 1
        for k in range(b):
            idx[a + k] = buf[k]

        feature[node] = best_f
        threshold[node] = best_cut
        left[node] = n_nodes
        right[node] = n_nodes + 1
        n_nodes += 2
        top += 1
        stack_node[top] = right[node]
        stack_lo[top] = a
        stack_hi[top] = hi
        top += 1
        stack_node[top] = left[node]
        stack_lo[top] = lo
        stack_hi[top] = a
    return (
        feature[:n_nodes].copy(),
        threshold[:n_nodes].copy(),
        left[:n_nodes].copy(),
        right[:n_nodes].copy(),
        value[:n_nodes].copy(),
        count[:n_nodes].copy(),
    )


@njit(cache=True, nogil=True)
def _predict_tree(X, feature, threshold, left, right, value, out):
    for i in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = value[node]


def _map(fn, items, workers):
    if workers <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def fit_extra_trees(
    rows,
    targets,
    params: ExtraTreesParams | None = None,
    seed: int = 0,
    workers: int = 1,
) -> TreeEnsembleModel:
    if params is None:
        params = ExtraTreesParams()
    X = np.ascontiguousarray(getattr(rows, "rows", rows), dtype=float)
    y = np.ascontiguousarray(targets, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0:
        raise DataError("empty training set")
    if y.shape != (X.shape[0],):
        raise DataError(f"{X.shape[0]} rows but {y.size} targets")
    if not np.all(np.isfinite(y)):
        raise DataError("NaN or infinite target")
    if not np.all(np.isfinite(X)):
        raise DataError("NaN or infinite feature")
    seed64 = _rng.as_seed(seed)

    def grow(t):
        return RegressionTree(*_grow_tree(X, y, params.min_samples_split, seed64, t))

    trees = tuple(_map(grow, range(params.n_trees), workers))
    return TreeEnsembleModel(trees, params, int(seed), X.shape[1], (float(y.min()), float(y.max())))


def predict(model: TreeEnsembleModel, rows, workers: int = 1) -> np.ndarray:
    """Average of the per-tree leaf values."""
    X = np.ascontiguousarray(getattr(rows, "rows", rows), dtype=float)
    if X.ndim != 2 or X.shape[1] != model.feature_count:
        raise DataError(
            f"expected rows of width {model.feature_count}, got shape {X.shape}"
        )
    per_tree = np.empty((len(model.trees), X.shape[0]))

    def run(t):
        tree = model.trees[t]
        _predict_tree(X, tree.feature, tree.threshold, tree.left, tree.right, tree.value, per_tree[t])

    _map(run, range(len(model.trees)), workers)
    lo = per_tree.min(axis=0)
    hi = per_tree.max(axis=0)
    return np.clip(lo + (per_tree - lo).mean(axis=0), lo, hi)


def assign_folds(case_ids, folds: int, seed: int, labels=None) -> list[list[str]]:
    """Partition case ids into ``folds`` near-equal groups.

    Ids are sorted first so the split does not depend on row order. Without
    ``labels`` the sorted ids are shuffled and cut into contiguous blocks;
    with ``labels`` each class is shuffled separately and dealt round-robin.
    """
    ids = sorted(case_ids)
    n = len(ids)
    if folds < 2:
        raise DataError("need at least 2 folds")
    if folds > n:
        raise DataError(f"{folds} folds exceed {n} cases")
    rng = np.random.default_rng(seed)
    if labels is None:
        perm = rng.permutation(n)
        return [[ids[i] for i in block] for block in np.array_split(perm, folds)]
    label_of = dict(zip(case_ids, labels))
    out: list[list[str]] = [[] for _ in range(folds)]
    k = 0
    for c in sorted(set(label_of.values())):
        members = [i for i in ids if label_of[i] == c]
        for j in rng.permutation(len(members)):
            out[k % folds].append(members[j])
            k += 1
    return out


def cross_val_predict(
    data: EmbeddingDataset,
    truth: DifficultyVector,
    use_label: bool,
    folds: int = 5,
    seed: int = 0,
    params: ExtraTreesParams | None = None,
    stratify: bool = False,
    workers: int = 1,
) -> DifficultyVector:
    """One out-of-fold prediction per case.

    Every case is predicted by a model fitted on the other folds only, so a
    single tau can be computed over the whole set. Training rows are used in
    sorted-id order, which makes results independent of input row order.
    """
    target = truth.aligned_to(data.case_ids).scores
    feats = build_features(data, use_label).rows
    pos = data.index_of()
    fold_ids = assign_folds(
        list(data.case_ids), folds, seed, data.labels.tolist() if stratify else None
    )
    preds = np.empty(len(data))
    for f, test_ids in enumerate(fold_ids):
        held = set(test_ids)
        train = np.array([pos[c] for c in sorted(data.case_ids) if c not in held])
        test = np.array([pos[c] for c in test_ids])
        fold_seed = int(np.random.SeedSequence([int(seed) % (1 << 63), f]).generate_state(1, np.uint64)[0])
        model = fit_extra_trees(feats[train], target[train], params, fold_seed, workers)
        preds[test] = predict(model, feats[test], workers)
    name = "xt_embed_label" if use_label else "xt_embed"
    return DifficultyVector(name, data.case_ids, preds)
