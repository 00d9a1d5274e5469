"""Resource gathering: fetch gold or gems and bring them home past two enemy cells.

State = (cell, carried item, deliveries so far).  Standing at home with an
item delivers it on the next action, whatever the action is.  The fifth
delivery ends the episode.  Stepping onto an enemy cell triggers an attack
with probability 1/10, which sends the agent home empty-handed.
"""

from __future__ import annotations

from fractions import Fraction

from ..pmdp import PMdp, build_pmdp
from ..polynomial import Polynomial
from ._grid import MOVE_NAMES, add_label, step

SIZE = 5
HOME = (4, 2)
GOLD = (0, 2)
GEM = (1, 4)
ENEMIES = ((0, 3), (1, 2))
ITEMS = ("none", "gold", "gem")
VALUE = {"gold": 1, "gem": 2}
DELIVERIES = 5
ATTACK = Fraction(1, 10)


def state_name(cell, item, done) -> str:
    return f"r{cell[0]}c{cell[1]}_{item}_{done}"


def _arrive(cell, item):
    """Item after entering ``cell`` (pickups happen on arrival)."""
    if item == "none" and cell == GOLD:
        return "gold"
    if item == "none" and cell == GEM:
        return "gem"
    return item


def _outcomes(cell, item, done, label) -> list:
    """Successor states and labels for landing on ``cell`` with the given label."""
    if cell in ENEMIES:
        return [(state_name(cell, _arrive(cell, item), done), label * (1 - ATTACK)),
                (state_name(HOME, "none", done), label * ATTACK)]
    return [(state_name(cell, _arrive(cell, item), done), label)]


def build_resource_gathering(gamma=Fraction(19, 20)) -> PMdp:
    cells = [(r, c) for r in range(SIZE) for c in range(SIZE)]
    open_cells = set(cells)
    x = Polynomial.var("x")
    states = [state_name(c, it, d) for d in range(DELIVERIES) for it in ITEMS for c in cells]
    states.append("done")
    trans, rewards = {}, {}
    for d in range(DELIVERIES):
        for item in ITEMS:
            for cell in cells:
                s = state_name(cell, item, d)
                delivering = cell == HOME and item != "none"
                for mv in MOVE_NAMES:
                    row: dict = {}
                    if delivering:
                        rewards[(s, mv)] = VALUE[item]
                        if d + 1 == DELIVERIES:
                            trans[(s, mv)] = {"done": 1}
                            continue
                        it, dd = "none", d + 1
                    else:
                        it, dd = item, d
                    nxt = step(cell, mv, open_cells)
                    if nxt == cell:
                        outs = [(state_name(cell, it, dd), Polynomial.const(1))]
                    else:
                        outs = _outcomes(nxt, it, dd, 1 - x) + [(state_name(cell, it, dd), x)]
                    for t, lab in outs:
                        add_label(row, t, lab)
                    trans[(s, mv)] = row
    trans[("done", "up")] = {"done": 1}
    return build_pmdp("resource_gathering", states, MOVE_NAMES, state_name(HOME, "none", 0),
                      trans, rewards, gamma, params=["x"])
