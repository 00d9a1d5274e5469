"""A small Pac-Man: reach the food while a ghost patrols a ring.

The maze is a 5x5 ring around a 3x3 block, with a corridor leading east to
the food.  The ghost moves along the ring clockwise, counter-clockwise or
not at all with fixed probabilities, so the model has no parameters.
Pac-Man is caught when both end on the same cell or swap cells.
"""

from __future__ import annotations

from fractions import Fraction

from ..pmdp import PMdp, build_pmdp
from ._grid import MOVES, add_label

RING = ([(1, c) for c in range(1, 6)] + [(r, 5) for r in range(2, 6)]
        + [(5, c) for c in range(4, 0, -1)] + [(r, 1) for r in range(4, 1, -1)])
INNER = [(r, c) for r in range(2, 5) for c in range(2, 5)]
CORRIDOR = [(3, c) for c in range(6, 12)]
CELLS = RING + INNER + CORRIDOR
FOOD = (3, 11)
START_PAC, START_GHOST = (3, 3), 0
GHOST_MOVES = ((1, Fraction(1, 2)), (-1, Fraction(1, 3)), (0, Fraction(1, 6)))
ACTIONS = ("up", "down", "left", "right", "stay")
FOOD_REWARD = 10
CAUGHT_REWARD = -1


def state_name(pac, ghost: int) -> str:
    return f"p{pac[0]}_{pac[1]}_g{ghost}"


def _pac_move(cell, action):
    if action == "stay":
        return cell
    dr, dc = MOVES[action]
    nxt = (cell[0] + dr, cell[1] + dc)
    return nxt if nxt in set(CELLS) else cell


def build_pacman(gamma=Fraction(19, 20)) -> PMdp:
    n_ring = len(RING)
    states = [state_name(p, g) for p in CELLS for g in range(n_ring)] + ["caught", "won"]
    trans, rewards = {}, {}
    for pac in CELLS:
        for g in range(n_ring):
            s = state_name(pac, g)
            for act in ACTIONS:
                if pac == RING[g]:
                    trans[(s, act)] = {"caught": 1}
                    continue
                if pac == FOOD:
                    trans[(s, act)] = {"won": 1}
                    rewards[(s, act)] = FOOD_REWARD
                    continue
                nxt = _pac_move(pac, act)
                row: dict = {}
                for dg, prob in GHOST_MOVES:
                    g2 = (g + dg) % n_ring
                    swap = nxt == RING[g] and RING[g2] == pac
                    target = "caught" if nxt == RING[g2] or swap else state_name(nxt, g2)
                    add_label(row, target, prob)
                trans[(s, act)] = row
    trans[("caught", "stay")] = {"caught": 1}
    rewards[("caught", "stay")] = CAUGHT_REWARD
    trans[("won", "stay")] = {"won": 1}
    return build_pmdp("pacman", states, ACTIONS, state_name(START_PAC, START_GHOST), trans,
                      rewards, gamma)
