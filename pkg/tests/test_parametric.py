import numpy as np
import pytest

from pspi.parametric import (label_classes, parametric_mle, parametric_uncertainty_set,
                             pooled_counts, pspibb_policy)
from pspi.pmdp import ModelError, build_pmdp, skeleton_mdp
from pspi.random_models import random_pmdp
from pspi.solve import uniform_policy
from pspi.spibb import Dataset, count, mle_mdp, spibb_policy, uncertainty_set


@pytest.fixture
def shared():
    # (u, go) and (w, go) both carry {x, 1-x}
    return build_pmdp("shared", ["u", "w", "t", "f"], ["go", "alt"], "u",
                      {("u", "go"): {"t": "x", "f": "1-x"}, ("w", "go"): {"t": "x", "f": "1-x"},
                       ("u", "alt"): {"w": 1}, ("w", "alt"): {"u": 1},
                       ("t", "go"): {"t": 1}, ("f", "go"): {"f": 1}},
                      {("t", "go"): 1}, params=["x"])


def test_partial_sharing_not_pooled(sharing):
    lc = label_classes(sharing)
    s0, a, b = 0, 0, 1
    s1, s3 = sharing.state_index("s1"), sharing.state_index("s3")
    assert lc.sa_class[s0, a] != lc.sa_class[s0, b]
    assert (s0, b, s3) not in lc.trans_members(s0, a, s1)


def test_shared_labels_pooled(shared):
    lc = label_classes(shared)
    u, w, t = 0, 1, 2
    assert lc.sa_class[u, 0] == lc.sa_class[w, 0]
    assert lc.trans_class(u, 0, t) == lc.trans_class(w, 0, t)


def test_constant_rows_are_singletons(rng):
    m = random_pmdp(rng, n_states=5, p_param=0.0)
    assert label_classes(m).all_singletons()


def test_repeated_parametric_label_rejected():
    m = build_pmdp("dup", ["s", "t", "u"], ["a"], "s",
                   {("s", "a"): {"t": "x", "u": "x"}, ("t", "a"): {"t": 1}, ("u", "a"): {"u": 1}},
                   params=["x"])
    with pytest.raises(ModelError):
        label_classes(m)


def _random_data(m, rng, n):
    sk = skeleton_mdp(m)
    pairs = np.argwhere(sk.enabled)
    out = []
    for s, a in pairs[rng.integers(len(pairs), size=n)]:
        out.append((s, a, rng.choice(np.flatnonzero(sk.P[s, a]))))
    return count(Dataset(out), m.n_states, m.n_actions)


def test_singleton_pooling_is_identity(rng):
    m = random_pmdp(rng, n_states=5, p_param=0.0)
    c = _random_data(m, rng, 40)
    p = pooled_counts(c, label_classes(m))
    assert np.array_equal(p.n_sa, c.n_sa) and np.array_equal(p.n_sas, c.n_sas)


def test_pooled_denominator(shared):
    d = Dataset([(0, 0, 2)] * 3 + [(1, 0, 3)] * 4)
    p = pooled_counts(count(d, 4, 2), label_classes(shared))
    assert p.n_sa[0, 0] == p.n_sa[1, 0] == 7


def test_pooled_mle_by_hand(shared):
    d = Dataset([(0, 0, 2), (0, 0, 2), (1, 0, 2), (1, 0, 3)])
    mle = parametric_mle(count(d, 4, 2), label_classes(shared), skeleton_mdp(shared))
    for s in (0, 1):
        assert mle.P[s, 0, 2] == pytest.approx(0.75) and mle.P[s, 0, 3] == pytest.approx(0.25)


def test_pooled_uncertainty_by_hand(shared):
    d = Dataset([(0, 0, 2)] * 3 + [(1, 0, 3)] * 3)
    c = count(d, 4, 2)
    sk = skeleton_mdp(shared)
    u = parametric_uncertainty_set(c, label_classes(shared), 5, sk)
    assert (0, 0) not in u and (0, 0) in uncertainty_set(c, 5, sk)


def test_pooled_rows_consistent_and_subset(rng):
    for _ in range(40):
        m = random_pmdp(rng, n_states=6)
        lc = label_classes(m)
        sk = skeleton_mdp(m)
        pairs = np.argwhere(sk.enabled)
        c = _random_data(m, rng, 60)
        p = pooled_counts(c, lc)
        assert np.array_equal(p.n_sas.sum(axis=2), p.n_sa)
        # brute force: pooled denominator is the sum over class members
        for s, a in pairs:
            members = lc.sa_members(s, a)
            assert p.n_sa[s, a] == sum(c.n_sa[q, b] for q, b in members)
        n = int(rng.integers(1, 30))
        assert parametric_uncertainty_set(c, lc, n, sk).issubset(uncertainty_set(c, n, sk))


def test_no_sharing_matches_spibb(rng):
    m = random_pmdp(rng, n_states=5, p_param=0.0)
    sk = skeleton_mdp(m)
    c = _random_data(m, rng, 80)
    pi_b = uniform_policy(sk)
    ours = pspibb_policy(label_classes(m), c, pi_b, 5, sk)
    plain = spibb_policy(mle_mdp(c, sk), pi_b, uncertainty_set(c, 5, sk))
    assert np.array_equal(ours, plain)


def test_empty_dataset_returns_behaviour(shared):
    sk = skeleton_mdp(shared)
    c = count(Dataset(np.zeros((0, 3))), 4, 2)
    pi_b = uniform_policy(sk)
    assert np.array_equal(pspibb_policy(label_classes(shared), c, pi_b, 3, sk), pi_b)
