import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from casediff.baselines import (
    BASELINES,
    classification_margin,
    classification_uncertainty,
    entropy_score,
    self_taught_score,
)
from casediff.dataset import DataError, ProbabilityMatrix
from casediff.stats import kendall_tau


def pm(rows, labels=None):
    rows = np.asarray(rows, dtype=float)
    labels = [0] * len(rows) if labels is None else labels
    return ProbabilityMatrix([f"c{i}" for i in range(len(rows))], labels, rows)


def test_uncertainty():
    s = classification_uncertainty(pm([[1, 0], [0.7, 0.3]])).scores
    assert s[0] == 0.0 and s[1] == pytest.approx(0.3)
    assert classification_uncertainty(pm([[0.25] * 4])).scores[0] == 0.75


def test_entropy():
    assert entropy_score(pm([[1, 0, 0]])).scores[0] == 0.0
    assert entropy_score(pm([[1 / 3] * 3])).scores[0] == pytest.approx(math.log(3), abs=1e-12)
    assert entropy_score(pm([[0.5, 0.5]])).scores[0] == pytest.approx(0.6931, abs=5e-5)


def test_margin():
    s = classification_margin(pm([[1, 0], [0.5, 0.5], [0.7, 0.3]])).scores
    assert s.tolist() == pytest.approx([-1.0, 0.0, -0.4])
    with pytest.raises(DataError):
        classification_margin(pm([[1.0]]))


def test_self_taught():
    s = self_taught_score(pm([[0.9, 0.1], [0.1, 0.9], [0, 1]], labels=[0, 0, 1])).scores
    assert s.tolist() == pytest.approx([0.1, 0.9, 0.0])


def test_method_names():
    assert {f(pm([[0.6, 0.4]])).method_name for f in BASELINES.values()} == set(BASELINES)


def _random_probs(rng, n, c):
    p = rng.dirichlet(np.ones(c), size=n)
    return pm(p, rng.integers(0, c, n).tolist())


def test_two_class_uncertainty_and_margin_rank_identically(rng):
    probs = _random_probs(rng, 300, 2)
    a = classification_uncertainty(probs).scores
    b = classification_margin(probs).scores
    assert kendall_tau(a, b).tau == 1.0


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 6))
def test_class_permutation_invariance(seed, c):
    rng = np.random.default_rng(seed)
    probs = _random_probs(rng, 20, c)
    perm = rng.permutation(c)
    inverse = np.argsort(perm)
    permuted = pm(probs.probs[:, perm], inverse[probs.labels].tolist())
    for fn in BASELINES.values():
        np.testing.assert_allclose(fn(probs).scores, fn(permuted).scores, rtol=0, atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 6))
def test_entropy_maximal_on_uniform(seed, c):
    rng = np.random.default_rng(seed)
    probs = _random_probs(rng, 50, c)
    assert np.all(entropy_score(probs).scores <= math.log(c) + 1e-12)
    assert entropy_score(pm([[1 / c] * c])).scores[0] == pytest.approx(math.log(c), abs=1e-12)
