import itertools
from math import comb

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdlclust.baseclust import kmeans
from mdlclust.dataio import load_builtin, normalize
from mdlclust.validation import (
    UNMATCHED,
    accuracy,
    align_labels,
    ari,
    contingency,
    evaluate,
    f_measure,
    nmi,
    pair_counts,
    rand_index,
)

from .oracles import (
    accuracy_bruteforce,
    ari_pairs,
    contingency_loop,
    fmeasure_pairs,
    nmi_plugin,
    pairs_loop,
    rand_pairs,
)

CROSS = ([1, 1, 2, 2], [1, 2, 1, 2])
SYMMETRIC = [nmi, ari, f_measure, rand_index]


def random_pair(rng, n=None):
    n = n or int(rng.integers(2, 13))
    return rng.integers(1, int(rng.integers(1, 5)) + 1, n), rng.integers(1, int(rng.integers(1, 5)) + 1, n)


def test_contingency_examples():
    np.testing.assert_array_equal(contingency([1, 1, 2, 2], [1, 1, 2, 2]).m, [[2, 0], [0, 2]])
    ct = contingency([1, 1, 1, 1], [1, 1, 2, 2])
    np.testing.assert_array_equal(ct.m, [[2, 2]])
    assert ct.n == 4
    with pytest.raises(ValueError):
        contingency([1, 2], [1, 2, 3])


def test_pair_count_examples():
    pc = pair_counts([1, 1, 2, 2], [1, 1, 2, 2])
    assert (pc.a, pc.b, pc.c, pc.d) == (2, 0, 0, 4)
    pc = pair_counts(*CROSS)
    assert (pc.a, pc.b, pc.c, pc.d) == (0, 2, 2, 2)
    with pytest.raises(ValueError):
        pair_counts([1], [1])


def test_crossed_design_scores():
    assert rand_index(*CROSS) == pytest.approx(1 / 3)
    assert f_measure(*CROSS) == 0.0
    assert nmi(*CROSS) == 0.0
    # contingency [[1,1],[1,1]]: index 0, E = 2*2/6, denominator 2 - E
    assert ari(*CROSS) == pytest.approx((0 - 2 / 3) / (2 - 2 / 3))


def test_alignment_examples():
    assert align_labels([2, 2, 1, 1], [1, 1, 2, 2]) == {2: 1, 1: 2}
    assert accuracy([2, 2, 1, 1], [1, 1, 2, 2]) == 1.0
    assert align_labels([1, 2, 3], [1, 2, 3]) == {1: 1, 2: 2, 3: 3}
    assert accuracy([1] * 8, [1] * 4 + [2] * 4) == 0.5


def test_alignment_leaves_extra_ids_unmatched():
    mapping = align_labels([1, 1, 2, 3], [1, 1, 2, 2])
    assert mapping[1] == 1
    assert sorted(mapping.values()) == [UNMATCHED, 1, 2]


@pytest.mark.parametrize("seed", range(30))
def test_metrics_match_oracles(seed):
    rng = np.random.default_rng(seed)
    p, t = random_pair(rng)
    ct = contingency(p, t)
    np.testing.assert_array_equal(ct.m, contingency_loop(p.tolist(), t.tolist()))
    pc = pair_counts(p, t)
    assert (pc.a, pc.b, pc.c, pc.d) == pairs_loop(p.tolist(), t.tolist())
    assert pc.total == comb(len(p), 2)
    assert nmi(p, t) == pytest.approx(nmi_plugin(p.tolist(), t.tolist()), abs=1e-12)
    assert ari(p, t) == pytest.approx(ari_pairs(p.tolist(), t.tolist()), abs=1e-12)
    assert rand_index(p, t) == pytest.approx(rand_pairs(p.tolist(), t.tolist()), abs=1e-12)
    assert f_measure(p, t) == pytest.approx(fmeasure_pairs(p.tolist(), t.tolist()), abs=1e-12)


@pytest.mark.parametrize("kc, ku", [(2, 2), (3, 2), (2, 4), (5, 6), (6, 6)])
def test_alignment_matches_injective_bruteforce(kc, ku):
    rng = np.random.default_rng(kc * 10 + ku)
    for _ in range(5):
        p = np.concatenate([np.arange(1, kc + 1), rng.integers(1, kc + 1, 10)])
        t = np.concatenate([np.arange(1, ku + 1), rng.integers(1, ku + 1, 10 + kc - ku)])
        rng.shuffle(p)
        assert accuracy(p, t) == pytest.approx(accuracy_bruteforce(p.tolist(), t.tolist()), abs=1e-12)
        mapping = align_labels(p, t)
        matched = [v for v in mapping.values() if v != UNMATCHED]
        assert len(matched) == len(set(matched)) == min(kc, ku)


def test_degenerate_partitions():
    one = [1, 1, 1, 1]
    single = [1, 2, 3, 4]
    for m in (nmi, ari, f_measure, rand_index, accuracy):
        assert m(one, one) == 1.0
        assert m(single, [4, 3, 2, 1]) == 1.0
    assert nmi(one, [1, 1, 2, 2]) == 0.0


labelings = st.integers(2, 12).flatmap(lambda n: st.tuples(
    st.lists(st.integers(1, 4), min_size=n, max_size=n),
    st.lists(st.integers(1, 4), min_size=n, max_size=n),
    st.permutations([1, 2, 3, 4]),
))


@settings(max_examples=150, deadline=None)
@given(labelings)
def test_permutation_invariance_and_symmetry(case):
    p, t, perm = case
    p, t = np.array(p), np.array(t)
    relabel = np.array([0] + list(perm))
    for m in SYMMETRIC + [accuracy]:
        base = m(p, t)
        assert m(relabel[p], t) == pytest.approx(base, abs=1e-12)
        assert m(p, relabel[t]) == pytest.approx(base, abs=1e-12)
    for m in SYMMETRIC:
        assert m(t, p) == pytest.approx(m(p, t), abs=1e-12)
    for m in SYMMETRIC + [accuracy]:
        assert m(p, p) == 1.0
        assert m(relabel[p], p) == 1.0


@settings(max_examples=100, deadline=None)
@given(labelings)
def test_metric_ranges(case):
    p, t, _ = case
    scores = evaluate(p, t, metrics=("accuracy", "nmi", "fmeasure", "rand"))
    assert all(0.0 <= v <= 1.0 for v in scores.values())
    assert -1.0 <= ari(p, t) <= 1.0


def test_evaluate_percent():
    out = evaluate([1, 1, 2, 2], [2, 2, 1, 1], percent=True)
    assert out == {"accuracy": 100.0, "nmi": 100.0, "ari": 100.0, "fmeasure": 100.0}


def test_ari_random_partitions_centred():
    rng = np.random.default_rng(0)
    vals = [ari(rng.integers(1, 4, 100), rng.integers(1, 4, 100)) for _ in range(1000)]
    assert abs(np.mean(vals)) < 0.05


def test_accuracy_small_exhaustive():
    # every labeling of 5 samples into <= 3 ids against a fixed truth
    t = [1, 1, 2, 2, 3]
    for p in itertools.product((1, 2, 3), repeat=5):
        assert accuracy(p, t) == pytest.approx(accuracy_bruteforce(list(p), t), abs=1e-12)


def test_iris_kmeans_accuracy_range():
    d = load_builtin("iris")
    x = normalize(d)
    scores = [accuracy(kmeans(x, 3, seed=s)[0], d.truth) for s in range(100)]
    assert 0.77 <= np.mean(scores) <= 0.96
