import itertools
from fractions import Fraction

import numpy as np
import pytest

from pspi.pmdp import Mdp, build_pmdp, instantiate
from pspi.solve import greedy, policy_evaluation, policy_iteration, uniform_policy, value_iteration


def _mdp(P, R, gamma, enabled=None):
    P, R = np.asarray(P, float), np.asarray(R, float)
    S, A = R.shape
    enabled = P.sum(axis=2) > 0 if enabled is None else enabled
    return Mdp(tuple(f"s{i}" for i in range(S)), tuple(f"a{j}" for j in range(A)), 0, P, R,
               gamma, enabled)


def _random_mdp(rng, S=3, A=2, gamma=0.9):
    P = rng.dirichlet(np.ones(S), size=(S, A))
    R = rng.uniform(-1, 1, (S, A))
    return _mdp(P, R, gamma)


def test_self_loop_minus_ten():
    m = _mdp([[[1.0]]], [[-10.0]], 0.95)
    assert value_iteration(m).V[0] == pytest.approx(-200.0, abs=1e-6)


def test_zero_rewards(rng):
    m = _random_mdp(rng)
    m = _mdp(m.P, np.zeros_like(m.R), m.gamma)
    vt = value_iteration(m)
    assert np.all(vt.V == 0) and np.all(vt.Q == 0)


def test_two_state_chain():
    m = _mdp([[[0, 1]], [[0, 1]]], [[1.0], [0.0]], 0.5)
    assert value_iteration(m).V == pytest.approx([1.0, 0.0])


def test_uniform_symmetric_policy_is_zero():
    m = _mdp([[[1.0], [1.0]]], [[3.0, -3.0]], 0.9)
    assert policy_evaluation(m, uniform_policy(m)).V[0] == pytest.approx(0.0)


def test_deterministic_trajectory_sum():
    # s0 -> s1 -> s2 (absorbing)
    P = [[[0, 1, 0]], [[0, 0, 1]], [[0, 0, 1]]]
    m = _mdp(P, [[2.0], [4.0], [1.0]], 0.5)
    pi = np.ones((3, 1))
    assert policy_evaluation(m, pi).V[0] == pytest.approx(2 + 0.5 * 4 + 0.25 * 1 / (1 - 0.5))


def test_evaluation_matches_linear_solve(rng):
    for _ in range(20):
        m = _random_mdp(rng)
        pi = rng.dirichlet(np.ones(m.n_actions), size=m.n_states)
        P_pi = np.einsum("sa,sat->st", pi, m.P)
        R_pi = (pi * m.R).sum(axis=1)
        oracle = np.linalg.solve(np.eye(3) - m.gamma * P_pi, R_pi)
        assert policy_evaluation(m, pi).V == pytest.approx(oracle, abs=1e-8)
        assert policy_evaluation(m, pi, method="iterative", tol=1e-12).V == pytest.approx(oracle, abs=1e-8)


def test_policy_iteration_beats_all_deterministic_policies(rng):
    for _ in range(10):
        m = _random_mdp(rng, S=3, A=3)
        pi, vt = policy_iteration(m)
        best = -np.inf * np.ones(3)
        for choice in itertools.product(range(3), repeat=3):
            det = np.zeros((3, 3))
            det[np.arange(3), choice] = 1
            best = np.maximum(best, policy_evaluation(m, det).V)
        assert vt.V == pytest.approx(best, abs=1e-9)
        assert value_iteration(m).V == pytest.approx(best, abs=1e-8)


def test_single_action_policy():
    m = _mdp([[[0, 1]], [[1, 0]]], [[1.0], [2.0]], 0.9)
    pi, _ = policy_iteration(m)
    assert pi.tolist() == [[1.0], [1.0]]


def test_greedy_consistent_with_policy(rng):
    m = _random_mdp(rng, A=3)
    pi, vt = policy_iteration(m)
    assert np.array_equal(greedy(vt.Q, m.enabled, current=pi), pi)


def test_two_case_model_optimal_action(two_case):
    mdp = instantiate(two_case, {"x": 0.5, "y": 0.5, "z": 0.5})
    values = {}
    for a in range(3):
        pi = np.zeros((mdp.n_states, mdp.n_actions))
        pi[:, 0] = 1
        pi[0] = 0
        pi[0, a] = 1
        values[a] = policy_evaluation(mdp, pi).V[0]
    assert max(values, key=values.get) == 0
    pi, _ = policy_iteration(mdp)
    assert pi[0].argmax() == 0


def test_transient_state_costs_no_step():
    # s --go--> hub (transient) --> t with reward on t; value must match a direct edge
    direct = build_pmdp("d", ["s", "t"], ["go"], "s",
                        {("s", "go"): {"t": 1}, ("t", "go"): {"t": 1}}, {("t", "go"): 1},
                        gamma=Fraction(1, 2))
    hub = build_pmdp("h", ["s", "t", "hub"], ["go"], "s",
                     {("s", "go"): {"hub": 1}, ("t", "go"): {"t": 1}, ("hub", "go"): {"t": 1}},
                     {("t", "go"): 1}, gamma=Fraction(1, 2))
    from dataclasses import replace
    hub = replace(hub, transient=frozenset({2}))
    vd = value_iteration(instantiate(direct, {})).V
    vh = value_iteration(instantiate(hub, {})).V
    assert vh[0] == pytest.approx(vd[0])


def test_mass_on_disabled_pair_stays_in_place():
    # s has a visited action to an absorbing goal and an unvisited one
    P = np.zeros((2, 2, 2))
    P[0, 0, 1] = P[1, 0, 1] = 1
    enabled = np.array([[True, False], [True, False]])
    m = Mdp(("s", "g"), ("go", "wait"), 0, P, np.array([[-1.0, -1.0], [0.0, 0.0]]), 0.9, enabled)
    pi = np.array([[0.5, 0.5], [1.0, 0.0]])
    # V = -1 + 0.9 * (0.5 * V + 0.5 * 0)
    assert policy_evaluation(m, pi).V[0] == pytest.approx(-1 / (1 - 0.45))
    assert policy_evaluation(m, pi, method="iterative", tol=1e-13).V[0] == pytest.approx(-1 / (1 - 0.45))
