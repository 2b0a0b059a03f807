"""Kendall's tau-b, concordance conversion and paired bootstrap comparison."""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numba import njit

from . import _rng
from .dataset import DataError, DifficultyVector

N_REPLICATES = 50_000
ALPHA = 0.05
MAX_REDRAWS = 10
P_VALUE_CONVENTION = (
    "one-sided paired bootstrap: p(a > b) = fraction of replicates with tau_a <= tau_b; "
    "a beats b significantly when p < alpha"
)


class UndefinedTauError(ValueError):
    """Raised when a vector is constant, so tau-b has a zero denominator."""


@dataclass(frozen=True)
class TauResult:
    tau: float
    n: int
    concordant: int
    discordant: int
    tied_x: int
    tied_y: int
    tied_both: int = 0

    @property
    def concordance(self) -> float:
        return tau_to_concordance(self.tau)


@njit(cache=True, nogil=True)
def _merge_count(a, buf):
    """Stable bottom-up merge sort of ``a`` in place; returns #strict inversions."""
    n = a.shape[0]
    swaps = 0
    width = 1
    while width < n:
        lo = 0
        while lo < n - width:
            mid = lo + width
            hi = min(lo + 2 * width, n)
            i, j, k = lo, mid, lo
            while i < mid and j < hi:
                if a[j] < a[i]:
                    buf[k] = a[j]
                    swaps += mid - i
                    j += 1
                else:
                    buf[k] = a[i]
                    i += 1
                k += 1
            while i < mid:
                buf[k] = a[i]
                i += 1
                k += 1
            while j < hi:
                buf[k] = a[j]
                j += 1
                k += 1
            for t in range(lo, hi):
                a[t] = buf[t]
            lo += 2 * width
        width *= 2
    return swaps


@njit(cache=True, nogil=True)
def _tau_counts(xr, yr):
    """Pair counts from dense integer ranks.

    Returns (concordant, discordant, tied only in x, tied only in y, tied in both).
    """
    n = xr.shape[0]
    m = yr.max() + 1
    order = np.argsort(xr * m + yr, kind="mergesort")
    xs = xr[order]
    ys = yr[order].copy()
    n_x = 0
    n_xy = 0
    run_x = 1
    run_xy = 1
    for i in range(1, n):
        if xs[i] == xs[i - 1]:
            run_x += 1
            if ys[i] == ys[i - 1]:
                run_xy += 1
            else:
                n_xy += run_xy * (run_xy - 1) // 2
                run_xy = 1
        else:
            n_x += run_x * (run_x - 1) // 2
            n_xy += run_xy * (run_xy - 1) // 2
            run_x = 1
            run_xy = 1
    n_x += run_x * (run_x - 1) // 2
    n_xy += run_xy * (run_xy - 1) // 2
    # within an x-tie y is ascending, so every inversion is a discordant pair
    disc = _merge_count(ys, np.empty_like(ys))
    n_y = 0
    run_y = 1
    for i in range(1, n):
        if ys[i] == ys[i - 1]:
            run_y += 1
        else:
            n_y += run_y * (run_y - 1) // 2
            run_y = 1
    n_y += run_y * (run_y - 1) // 2
    total = n * (n - 1) // 2
    conc = total - n_x - n_y + n_xy - disc
    return conc, disc, n_x - n_xy, n_y - n_xy, n_xy


def _tau_from_counts(conc, disc, tx, ty):
    denom = float(conc + disc + tx) * float(conc + disc + ty)
    if denom == 0.0:
        raise UndefinedTauError("undefined tau: a vector has all values tied")
    return float(conc - disc) / math.sqrt(denom)


def dense_ranks(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError("expected a 1-D vector")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite value in rank vector")
    return np.unique(x, return_inverse=True)[1].astype(np.int64).ravel()


def kendall_tau(x, y) -> TauResult:
    """Tie-corrected Kendall's tau-b in O(n log n).

    ``tau = (C - D) / sqrt((C + D + Tx) (C + D + Ty))`` where ``Tx`` and ``Ty``
    count pairs tied only in ``x`` or only in ``y``; pairs tied in both are
    left out of all four counts.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch: {x.shape} vs {y.shape}")
    n = x.shape[0]
    if n < 2:
        raise ValueError("kendall tau needs at least 2 observations")
    c, d, tx, ty, txy = (int(v) for v in _tau_counts(dense_ranks(x), dense_ranks(y)))
    return TauResult(_tau_from_counts(c, d, tx, ty), n, c, d, tx, ty, txy)


def tau_to_concordance(tau: float) -> float:
    """Fraction of pairs ordered consistently, ``(tau + 1) / 2``."""
    if not -1.0 <= tau <= 1.0:
        raise ValueError(f"tau {tau!r} outside [-1, 1]")
    return (tau + 1.0) / 2.0


@njit(cache=True, nogil=True)
def _is_constant(r, idx):
    first = r[idx[0]]
    for i in range(1, idx.shape[0]):
        if r[idx[i]] != first:
            return False
    return True


@njit(cache=True, nogil=True)
def _bootstrap_block(truth_r, methods_r, seed, start, stop, max_redraws, out):
    """Fill ``out[r - start]`` with per-method taus for replicates [start, stop).

    Returns -1 on success, else the replicate index that exhausted its redraws.
    """
    n = truth_r.shape[0]
    n_methods = methods_r.shape[0]
    idx = np.empty(n, dtype=np.int64)
    for r in range(start, stop):
        state = _rng.stream_state(seed, r)
        ok = False
        for _attempt in range(max_redraws + 1):
            for i in range(n):
                idx[i] = _rng.randbelow(state, n)
            ok = not _is_constant(truth_r, idx)
            if ok:
                for k in range(n_methods):
                    if _is_constant(methods_r[k], idx):
                        ok = False
                        break
            if ok:
                break
        if not ok:
            return r
        t = truth_r[idx]
        for k in range(n_methods):
            c, d, tx, ty, _ = _tau_counts(t, methods_r[k][idx])
            out[r - start, k] = (c - d) / np.sqrt(np.float64(c + d + tx) * np.float64(c + d + ty))
    return -1


def bootstrap_taus(truth, methods, replicates=N_REPLICATES, seed=0, workers=1) -> np.ndarray:
    """Paired bootstrap distribution of tau for every method.

    Each replicate resamples cases with replacement once and scores every
    method against truth on that same resample. Replicate ``r`` draws from
    its own stream keyed by ``(seed, r)``, so ``workers`` never changes the
    result. Returns an array of shape ``(replicates, n_methods)``.
    """
    if replicates < 1:
        raise ValueError("replicates must be >= 1")
    truth_r = dense_ranks(truth)
    methods_r = np.ascontiguousarray(np.vstack([dense_ranks(m) for m in methods]))
    seed64 = _rng.as_seed(seed)
    out = np.empty((replicates, methods_r.shape[0]))
    bounds = np.linspace(0, replicates, max(1, workers) + 1).astype(int)

    def run(k):
        lo, hi = bounds[k], bounds[k + 1]
        return _bootstrap_block(truth_r, methods_r, seed64, lo, hi, MAX_REDRAWS, out[lo:hi])

    if workers <= 1:
        failures = [run(0)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            failures = list(pool.map(run, range(workers)))
    for f in failures:
        if f >= 0:
            raise UndefinedTauError(
                f"bootstrap replicate {f}: every resample had a constant vector "
                f"after {MAX_REDRAWS} redraws"
            )
    return out


@dataclass
class BootstrapReport:
    method_names: list
    observed_tau: dict
    replicates: int
    alpha: float
    seed: int
    n: int
    # p_values[a][b]: evidence that a beats b
    p_values: dict
    significant: dict
    best: list
    bootstrap_mean_tau: dict = field(default_factory=dict)
    convention: str = P_VALUE_CONVENTION

    def to_dict(self) -> dict:
        return {
            "methods": list(self.method_names),
            "n": self.n,
            "replicates": self.replicates,
            "alpha": self.alpha,
            "seed": self.seed,
            "observed_tau": self.observed_tau,
            "concordance": {m: tau_to_concordance(t) for m, t in self.observed_tau.items()},
            "bootstrap_mean_tau": self.bootstrap_mean_tau,
            "p_values": self.p_values,
            "significant": self.significant,
            "significantly_best": list(self.best),
            "convention": self.convention,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False)

    def format_table(self) -> str:
        names = self.method_names
        width = max(len(m) for m in names + ["method"])
        lines = [
            f"{'method':<{width}}  {'tau':>7}  {'concord':>7}  best  beats (p < {self.alpha:g})",
        ]
        for m in sorted(names, key=lambda k: -self.observed_tau[k]):
            beaten = [b for b in names if b != m and self.significant[m][b]]
            lines.append(
                f"{m:<{width}}  {self.observed_tau[m]:>7.3f}  "
                f"{tau_to_concordance(self.observed_tau[m]):>7.3f}  "
                f"{'*' if m in self.best else ' ':^4}  {', '.join(beaten) or '-'}"
            )
        lines.append(f"n={self.n}, replicates={self.replicates}, seed={self.seed}")
        return "\n".join(lines)


def align_vectors(truth: DifficultyVector, methods: Sequence[DifficultyVector]) -> list[DifficultyVector]:
    """Reorder methods to truth's case order; case sets must be identical."""
    ids = set(truth.case_ids)
    out = []
    for m in methods:
        if set(m.case_ids) != ids or len(m.case_ids) != len(ids):
            raise DataError(f"method {m.method_name!r} is not aligned with truth case ids")
        out.append(m.aligned_to(truth.case_ids))
    return out


def bootstrap_compare(
    truth: DifficultyVector,
    methods: Sequence[DifficultyVector],
    replicates: int = N_REPLICATES,
    alpha: float = ALPHA,
    seed: int = 0,
    workers: int = 1,
) -> BootstrapReport:
    """Pairwise significance of tau differences between methods.

    ``p[a][b]`` is the fraction of replicates with ``tau_a <= tau_b``; method
    ``a`` significantly beats ``b`` when ``p[a][b] < alpha``. The best set
    holds every method no other method significantly beats.
    """
    names = [m.method_name for m in methods]
    if len(set(names)) != len(names):
        raise DataError("method names must be unique")
    if not methods:
        raise DataError("no methods to compare")
    methods = align_vectors(truth, methods)
    observed = {m.method_name: kendall_tau(truth.scores, m.scores).tau for m in methods}
    taus = bootstrap_taus(truth.scores, [m.scores for m in methods], replicates, seed, workers)
    p_values: dict = {a: {} for a in names}
    significant: dict = {a: {} for a in names}
    for i, a in enumerate(names):
        for j, b in enumerate(names):
            if i == j:
                continue
            p = float(np.count_nonzero(taus[:, i] <= taus[:, j])) / replicates
            p_values[a][b] = p
            significant[a][b] = p < alpha
    best = [b for b in names if not any(significant[a][b] for a in names if a != b)]
    return BootstrapReport(
        method_names=names,
        observed_tau=observed,
        replicates=replicates,
        alpha=alpha,
        seed=int(seed),
        n=len(truth),
        p_values=p_values,
        significant=significant,
        best=best,
        bootstrap_mean_tau={a: float(taus[:, i].mean()) for i, a in enumerate(names)},
    )
