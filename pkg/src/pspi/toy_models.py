"""Hand-sized pMDPs that exercise specific corner cases of tying and pruning."""

from __future__ import annotations

from fractions import Fraction

from .pmdp import PMdp, build_pmdp


def partial_sharing_model() -> PMdp:
    """Three actions at ``s0`` whose label sets overlap without being equal.

    ``(s0, a)`` and ``(s0, b)`` both carry the label ``x``, but their label
    sets differ, so their ``x`` transitions must not be pooled.
    """
    states = ["s0", "s1", "s2", "s3", "s4", "s5", "s6", "s7"]
    trans = {
        ("s0", "a"): {"s1": "x", "s2": "1-x"},
        ("s0", "b"): {"s3": "x", "s4": "y", "s5": "1-x-y"},
        ("s0", "c"): {"s6": "y", "s7": "1-y"},
    }
    for s in states[1:]:
        trans[(s, "a")] = {s: 1}
    return build_pmdp("partial_sharing", states, ["a", "b", "c"], "s0", trans, {},
                      Fraction(19, 20), params=["x", "y"])


def two_case_pruning_model(gamma=Fraction(19, 20)) -> PMdp:
    """Ten states where one action is strictly dominated and another only weakly.

    From ``s0``: action ``a`` loops back via ``s1`` or collects 5 via ``s2``;
    ``b`` ends in one of two zero-reward sinks; ``c`` ends in a -10 sink after
    a penalty of -1 or -5.  Branch probabilities are the parameters ``x``,
    ``y`` and ``z``.
    """
    states = [f"s{i}" for i in range(10)]
    trans = {
        ("s0", "a"): {"s1": "x", "s2": "1-x"},
        ("s0", "b"): {"s3": "y", "s4": "1-y"},
        ("s0", "c"): {"s5": "z", "s6": "1-z"},
        ("s1", "a"): {"s0": 1},
        ("s2", "a"): {"s9": 1},
        ("s3", "a"): {"s3": 1},
        ("s4", "a"): {"s4": 1},
        ("s5", "a"): {"s8": 1},
        ("s6", "a"): {"s7": 1},
        ("s7", "a"): {"s7": 1},
        ("s8", "a"): {"s8": 1},
        ("s9", "a"): {"s9": 1},
    }
    rewards = {("s2", "a"): 5, ("s5", "a"): -1, ("s6", "a"): -5, ("s7", "a"): -10, ("s8", "a"): -10}
    return build_pmdp("two_case_pruning", states, ["a", "b", "c"], "s0", trans, rewards, gamma,
                      params=["x", "y", "z"])


def qq_pruning_model(gamma=Fraction(9, 10)) -> PMdp:
    """Four states where only the Q-versus-Q test can remove ``(s0, a)``.

    Action ``a`` needs two successful ``p``-steps to reach the +20 sink,
    action ``b`` only one; failure leads to the -5 sink.
    """
    trans = {
        ("s0", "a"): {"s1": "p", "s3": "1-p"},
        ("s0", "b"): {"s2": "p", "s3": "1-p"},
        ("s1", "a"): {"s2": "p", "s3": "1-p"},
        ("s2", "a"): {"s2": 1},
        ("s3", "a"): {"s3": 1},
    }
    rewards = {("s2", "a"): 20, ("s3", "a"): -5}
    return build_pmdp("qq_pruning", ["s0", "s1", "s2", "s3"], ["a", "b"], "s0", trans, rewards,
                      gamma, params=["p"])
