"""Twenty rounds of rock-paper-scissors against a biased opponent.

A state records the round, the running score and the player's previous
play.  The opponent's mixed play depends on the player's previous play
through nine parameters ``o_<prev>_<play>``; the first round is uniform.

Per-round wins and losses (+1 / -1) depend on the opponent's draw, which a
pair-based reward cannot express directly.  The model therefore pays the
telescoped equivalent: every state of round t >= 1 with score k pays
``k (1 - gamma) / gamma`` per step, and final-round states are absorbing.
The discounted return of every run equals the discounted sum of per-round
outcomes, with round t's outcome discounted by ``gamma**t``.
"""

from __future__ import annotations

from fractions import Fraction

from ..pmdp import PMdp, build_pmdp
from ..polynomial import Polynomial

PLAYS = ("rock", "paper", "scissors")
ROUNDS = 20
BIAS = Fraction(1, 5)


def beats(p: int) -> int:
    """Index of the play that beats play ``p``."""
    return (p + 1) % 3


def outcome(player: int, opponent: int) -> int:
    if player == opponent:
        return 0
    return 1 if player == beats(opponent) else -1


def state_name(t: int, score: int, prev: int) -> str:
    return f"t{t}_s{score}_{PLAYS[prev][0]}"


def param_name(prev: int, play: int) -> str:
    return f"o_{PLAYS[prev][0]}{PLAYS[play][0]}"


def build_rps(gamma=Fraction(19, 20), rounds: int = ROUNDS) -> PMdp:
    gamma = Fraction(gamma)
    scale = (1 - gamma) / gamma
    states = ["start"]
    for t in range(1, rounds + 1):
        states += [state_name(t, k, p) for k in range(-t, t + 1) for p in range(3)]
    params = [param_name(p, q) for p in range(3) for q in range(3)]
    trans, rewards = {}, {}
    for a in range(3):
        row: dict = {}
        for o in range(3):
            key = state_name(1, outcome(a, o), a)
            row[key] = row.get(key, Fraction(0)) + Fraction(1, 3)
        trans[("start", PLAYS[a])] = row
    for t in range(1, rounds + 1):
        for k in range(-t, t + 1):
            for prev in range(3):
                s = state_name(t, k, prev)
                for a in range(3):
                    if k:
                        rewards[(s, PLAYS[a])] = k * scale
                    if t == rounds:
                        if a == 0:
                            trans[(s, PLAYS[a])] = {s: 1}
                        continue
                    trans[(s, PLAYS[a])] = {
                        state_name(t + 1, k + outcome(a, o), a): Polynomial.var(param_name(prev, o))
                        for o in range(3)}
    # final-round states keep a single action, so drop rewards of the others
    rewards = {key: r for key, r in rewards.items() if key in trans}
    return build_pmdp(f"rps{rounds}", states, PLAYS, "start", trans, rewards, gamma,
                      params=params)


def canonical_valuation(bias=BIAS) -> dict:
    """The play that beats the player's previous play gets extra weight ``bias``."""
    bias = Fraction(bias)
    out = {}
    for p in range(3):
        for q in range(3):
            out[param_name(p, q)] = Fraction(1, 3) + (bias if q == beats(p) else -bias / 2)
    return out
