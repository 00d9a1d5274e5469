"""Taxi on the classic 5x5 map with cell-specific slippery moves.

Every (cell, direction) has its own three parameters: veer left, veer right
and stay.  The intended move gets the remaining mass.  These parameters are
shared across all passenger/destination configurations, which is what makes
pooling pay off.  A transient hub state draws the initial configuration
uniformly from the 300 standard starts; delivered configurations are
absorbing.
"""

from __future__ import annotations

from dataclasses import replace
from fractions import Fraction

from ..pmdp import PMdp, build_pmdp
from ..polynomial import Polynomial
from ._grid import add_label

SIZE = 5
LANDMARKS = ((0, 0), (0, 4), (4, 0), (4, 3))  # R, G, Y, B
IN_TAXI = 4
ACTIONS = ("south", "north", "east", "west", "pickup", "dropoff")
DIRS = {"south": (1, 0), "north": (-1, 0), "east": (0, 1), "west": (0, -1)}
LEFT_OF = {"north": "west", "west": "south", "south": "east", "east": "north"}
RIGHT_OF = {v: k for k, v in LEFT_OF.items()}
# walls between horizontally adjacent cells: (row, col) cannot move east
EAST_WALLS = {(0, 1), (1, 1), (3, 0), (4, 0), (3, 2), (4, 2)}
SLIP = Fraction(1, 20)


def _blocked(cell, d) -> bool:
    r, c = cell
    dr, dc = DIRS[d]
    nr, nc = r + dr, c + dc
    if not (0 <= nr < SIZE and 0 <= nc < SIZE):
        return True
    if d == "east":
        return (r, c) in EAST_WALLS
    if d == "west":
        return (r, c - 1) in EAST_WALLS
    return False


def _move(cell, d):
    if _blocked(cell, d):
        return cell
    return cell[0] + DIRS[d][0], cell[1] + DIRS[d][1]


def state_name(cell, pas, dest) -> str:
    return f"t{cell[0]}{cell[1]}_p{pas}_d{dest}"


def param_names(cell, d) -> tuple:
    base = f"c{cell[0]}{cell[1]}{d[0]}"
    return base + "l", base + "r", base + "s"


def _move_labels(cell, d) -> dict:
    """Landing cell -> label for moving in direction ``d``."""
    pl, pr, ps = (Polynomial.var(n) for n in param_names(cell, d))
    out: dict = {}
    for target, lab in ((_move(cell, d), 1 - pl - pr - ps), (_move(cell, LEFT_OF[d]), pl),
                        (_move(cell, RIGHT_OF[d]), pr), (cell, ps)):
        out[target] = out.get(target, Polynomial()) + lab
    return out


def build_taxi(gamma=Fraction(19, 20)) -> PMdp:
    cells = [(r, c) for r in range(SIZE) for c in range(SIZE)]
    states = [state_name(c, p, d) for c in cells for p in range(5) for d in range(4)] + ["start"]
    params = [n for c in cells for d in DIRS for n in param_names(c, d)]
    trans, rewards = {}, {}
    for cell in cells:
        moves = {d: _move_labels(cell, d) for d in DIRS}
        for pas in range(5):
            for dest in range(4):
                s = state_name(cell, pas, dest)
                if pas == dest:  # delivered
                    trans[(s, "south")] = {s: 1}
                    continue
                for d in DIRS:
                    row: dict = {}
                    for target, lab in moves[d].items():
                        add_label(row, state_name(target, pas, dest), lab)
                    trans[(s, d)] = row
                    rewards[(s, d)] = -1
                if pas < IN_TAXI and cell == LANDMARKS[pas]:
                    trans[(s, "pickup")] = {state_name(cell, IN_TAXI, dest): 1}
                    rewards[(s, "pickup")] = -1
                else:
                    trans[(s, "pickup")] = {s: 1}
                    rewards[(s, "pickup")] = -10
                if pas == IN_TAXI and cell == LANDMARKS[dest]:
                    trans[(s, "dropoff")] = {state_name(cell, dest, dest): 1}
                    rewards[(s, "dropoff")] = 20
                else:
                    trans[(s, "dropoff")] = {s: 1}
                    rewards[(s, "dropoff")] = -10
    starts = [state_name(c, p, d) for c in cells for p in range(4) for d in range(4) if p != d]
    trans[("start", "south")] = {s: Fraction(1, len(starts)) for s in starts}
    m = build_pmdp("taxi", states, ACTIONS, "start", trans, rewards, gamma, params=params)
    # the hub only samples the start configuration, so it costs no discount step
    return replace(m, transient=frozenset({m.state_index("start")}))


def canonical_valuation() -> dict:
    return {n: SLIP for c in [(r, k) for r in range(SIZE) for k in range(SIZE)]
            for d in DIRS for n in param_names(c, d)}

