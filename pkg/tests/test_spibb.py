import numpy as np
import pytest

from pspi.pmdp import Mdp, build_pmdp, skeleton_mdp
from pspi.solve import policy_iteration, uniform_policy
from pspi.spibb import (CountTable, Dataset, UncertaintySet, count, mle_mdp, parse_dataset,
                        serialize_dataset, spibb_policy, uncertainty_set)


@pytest.fixture
def chain():
    # two states, two actions each, everything enabled
    m = build_pmdp("chain", ["s", "t"], ["a", "b"], "s",
                   {("s", "a"): {"s": "1/2", "t": "1/2"}, ("s", "b"): {"t": 1},
                    ("t", "a"): {"t": 1}, ("t", "b"): {"s": 1}},
                   {("s", "a"): 1, ("t", "a"): 2})
    return m


def test_empty_dataset_counts():
    c = count(Dataset(np.zeros((0, 3))), 2, 2)
    assert not c.n_sa.any() and not c.n_sas.any()


def test_counts_example_and_permutation(rng):
    d = Dataset([(0, 1, 1), (0, 1, 1), (0, 1, 0)])
    c = count(d, 2, 2)
    assert c.n_sa[0, 1] == 3 and c.n_sas[0, 1, 1] == 2 and c.n_sas[0, 1, 0] == 1
    triples = rng.integers(0, 3, (50, 3))
    a = count(Dataset(triples), 3, 3)
    b = count(Dataset(rng.permutation(triples)), 3, 3)
    assert np.array_equal(a.n_sas, b.n_sas)


def test_count_table_checks_consistency():
    with pytest.raises(ValueError):
        CountTable(np.ones((1, 1), int), np.zeros((1, 1, 1), int))


def test_mle_frequencies(chain):
    d = Dataset([(0, 0, 0)] * 1 + [(0, 0, 1)] * 3)
    mle = mle_mdp(count(d, 2, 2), skeleton_mdp(chain))
    assert mle.P[0, 0, 1] == 0.75
    assert mle.enabled.tolist() == [[True, False], [False, False]]
    assert np.allclose(mle.P.sum(axis=2)[mle.enabled], 1.0)


def test_uncertainty_set_examples(chain):
    sk = skeleton_mdp(chain)
    c = count(Dataset([(0, 0, 0)] * 3), 2, 2)
    assert len(uncertainty_set(c, 0, sk)) == 0
    assert (0, 0) in uncertainty_set(c, 5, sk)
    assert len(uncertainty_set(c, 10**9, sk)) == 4


def _det_optimal(mle):
    pi, _ = policy_iteration(mle)
    return pi


def test_all_uncertain_returns_behaviour(chain):
    sk = skeleton_mdp(chain)
    d = Dataset([(0, 0, 1), (1, 0, 1), (0, 1, 1), (1, 1, 0)])
    c = count(d, 2, 2)
    pi_b = uniform_policy(sk)
    pi = spibb_policy(mle_mdp(c, sk), pi_b, uncertainty_set(c, 100, sk))
    assert np.array_equal(pi, pi_b)


def test_no_uncertainty_gives_mle_optimal(chain):
    sk = skeleton_mdp(chain)
    d = Dataset([(0, 0, 1), (1, 0, 1), (0, 1, 1), (1, 1, 0)] * 5)
    c = count(d, 2, 2)
    mle = mle_mdp(c, sk)
    pi = spibb_policy(mle, uniform_policy(sk), uncertainty_set(c, 1, sk))
    assert np.array_equal(pi, _det_optimal(mle))


def test_three_case_rule_single_state():
    P = np.ones((1, 3, 1))
    R = np.array([[1.0, 5.0, 0.0]])
    enabled = np.ones((1, 3), bool)
    mle = Mdp(("s",), ("a1", "a2", "a3"), 0, P, R, 0.9, enabled)
    pi_b = np.array([[0.25, 0.5, 0.25]])
    u = UncertaintySet(np.array([[False, True, False]]))
    pi = spibb_policy(mle, pi_b, u)
    # a2 (uncertain) keeps its 1/2; the rest goes to the best certain action a1
    assert pi.tolist() == [[0.5, 0.5, 0.0]]


def test_pruned_pairs_get_no_mass():
    P = np.ones((1, 3, 1))
    R = np.array([[1.0, 5.0, 0.0]])
    mle = Mdp(("s",), ("a1", "a2", "a3"), 0, P, R, 0.9, np.ones((1, 3), bool))
    pi_b = np.array([[0.25, 0.5, 0.25]])
    u = UncertaintySet(np.array([[False, True, False]]))
    pruned = np.array([[False, True, False]])
    pi = spibb_policy(mle, pi_b, u, pruned=pruned)
    assert pi[0, 1] == 0 and pi.sum() == pytest.approx(1.0)


def test_fixed_point_not_worse_than_one_shot(rng):
    from pspi.bench import behavior_policy, get_spec
    from pspi.harness import sample_dataset
    from pspi.solve import policy_evaluation

    spec = get_spec("gridworld")
    m = spec.build()
    true = spec.true_mdp(m)
    pi_b = behavior_policy(true, spec.alpha)
    sk = skeleton_mdp(m)
    d = sample_dataset(true, pi_b, 500, 3, spec.horizon)
    c = count(d, m.n_states, m.n_actions)
    mle, u = mle_mdp(c, sk), uncertainty_set(c, 20, sk)
    one = policy_evaluation(mle, spibb_policy(mle, pi_b, u, one_shot=True)).V[0]
    fix = policy_evaluation(mle, spibb_policy(mle, pi_b, u)).V[0]
    assert fix >= one - 1e-9


def test_dataset_text_round_trip():
    d = Dataset([(0, 1, 1), (1, 0, 0), (0, 0, 1)], episodes=(0, 2), env="toy", seed=7)
    text = serialize_dataset(d, ["s", "t"], ["a", "b"])
    back = parse_dataset(text, ["s", "t"], ["a", "b"])
    assert np.array_equal(back.triples, d.triples)
    assert back.episodes == d.episodes and back.env == "toy" and back.seed == 7


def test_prefix_is_nested():
    d = Dataset(np.arange(30).reshape(10, 3) % 2, episodes=(0, 4, 8))
    p = d.prefix(6)
    assert np.array_equal(p.triples, d.triples[:6]) and p.episodes == (0, 4)


def test_unvisited_bootstrapped_moves_do_not_look_like_exits():
    """Blocked moves that were never observed must not be treated as a way out."""
    from pspi.harness import ExperimentConfig, run_seed

    cfg = ExperimentConfig("gridworld", methods=(("pspibb", "none"),), n_wedge=20,
                           sizes=(10, 100, 1000), n_seeds=8, seed=3)
    for i in range(cfg.n_seeds):
        r = run_seed(cfg, i)
        for perf in r.performance.values():
            assert perf >= r.baseline - 1e-9
