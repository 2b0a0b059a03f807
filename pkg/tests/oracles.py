"""Brute-force reference implementations, kept independent of the package."""
import math

import numpy as np


def kendall_pairs(x, y):
    """(C, D, tied only x, tied only y, tied both) by enumerating all pairs."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    i, j = np.triu_indices(len(x), k=1)
    dx = np.sign(x[i] - x[j])
    dy = np.sign(y[i] - y[j])
    both = (dx == 0) & (dy == 0)
    tx = (dx == 0) & (dy != 0)
    ty = (dx != 0) & (dy == 0)
    prod = dx * dy
    return (
        int(np.count_nonzero(prod > 0)),
        int(np.count_nonzero(prod < 0)),
        int(np.count_nonzero(tx)),
        int(np.count_nonzero(ty)),
        int(np.count_nonzero(both)),
    )


def kendall_tau_b(x, y):
    """tau-b from pair counts; None when undefined."""
    c, d, tx, ty, _ = kendall_pairs(x, y)
    denom = float(c + d + tx) * float(c + d + ty)
    if denom == 0:
        return None
    return (c - d) / math.sqrt(denom)


def weighted_auc_pairs(sims, is_pos, weights):
    """Weighted P(positive outranks negative), ties worth 1/2, by double loop."""
    num = 0.0
    den = 0.0
    for si, pi, wi in zip(sims, is_pos, weights):
        if not pi:
            continue
        for sj, pj, wj in zip(sims, is_pos, weights):
            if pj:
                continue
            w = wi * wj
            den += w
            if si > sj:
                num += w
            elif si == sj:
                num += 0.5 * w
    return num / den


def scp_oracle(embeddings, labels):
    """1 - weighted neighbour AUC per anchor, from explicit loops."""
    emb = np.asarray(embeddings, dtype=float)
    labels = np.asarray(labels)
    counts = {c: int(np.sum(labels == c)) for c in set(labels.tolist())}
    n = len(emb)
    out = np.empty(n)
    for a in range(n):
        sims, pos, w = [], [], []
        na = math.sqrt(sum(v * v for v in emb[a]))
        for b in range(n):
            if b == a:
                continue
            nb = math.sqrt(sum(v * v for v in emb[b]))
            s = sum(p * q for p, q in zip(emb[a], emb[b])) / (na * nb)
            sims.append(min(1.0, max(-1.0, s)))
            pos.append(labels[b] == labels[a])
            w.append(1.0 / counts[labels[b]])
        out[a] = 1.0 - weighted_auc_pairs(sims, pos, w)
    return out


def random_unit_vectors(rng, n, d):
    v = rng.standard_normal((n, d))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def weighted_auc_pairs_np(sims, is_pos, weights):
    """Vectorised form of :func:`weighted_auc_pairs` for larger inputs."""
    sims = np.asarray(sims, dtype=float)
    is_pos = np.asarray(is_pos, dtype=bool)
    w = np.asarray(weights, dtype=float)
    g = (sims[:, None] > sims[None, :]) + 0.5 * (sims[:, None] == sims[None, :])
    pw = np.where(is_pos, w, 0.0)
    nw = np.where(is_pos, 0.0, w)
    return float(pw @ g @ nw / (pw.sum() * nw.sum()))
