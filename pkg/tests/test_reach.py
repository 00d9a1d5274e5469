import itertools

import pytest

from pspi.reach import almost_sure_hit, almost_sure_region, support_pairs


def test_simple_chain_true():
    pairs = {(0, 0): [1], (1, 0): [2], (2, 0): [2]}
    assert almost_sure_hit(pairs, {(1, 0, 2)}, 0)


def test_unreachable_false():
    pairs = {(0, 0): [0], (1, 0): [2], (2, 0): [2]}
    assert not almost_sure_hit(pairs, {(1, 0, 2)}, 0)


def test_risky_branch_false():
    # the only action splits between the target and a trap
    pairs = {(0, 0): [1, 3], (1, 0): [2], (2, 0): [2], (3, 0): [3]}
    assert not almost_sure_hit(pairs, {(1, 0, 2)}, 0)


def test_retry_loop_true():
    # loop back to start with positive probability: still almost sure
    pairs = {(0, 0): [0, 1], (1, 0): [2], (2, 0): [2]}
    assert almost_sure_hit(pairs, {(1, 0, 2)}, 0)


def test_choice_avoids_trap():
    pairs = {(0, 0): [1, 3], (0, 1): [0, 1], (1, 0): [2], (2, 0): [2], (3, 0): [3]}
    region, witness = almost_sure_region(pairs, {(1, 0, 2)})
    assert 0 in region and witness[0] == 1


def test_two_case_example(two_case):
    s0, s2, s9 = (two_case.state_index(n) for n in ("s0", "s2", "s9"))
    assert almost_sure_hit(support_pairs(two_case), {(s2, 0, s9)}, s0)
