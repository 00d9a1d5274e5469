"""Small helpers shared by the grid-based environments."""

from __future__ import annotations

from fractions import Fraction

from ..polynomial import Polynomial

MOVES = {"up": (-1, 0), "down": (1, 0), "left": (0, -1), "right": (0, 1)}
MOVE_NAMES = ("up", "down", "left", "right")


def step(cell: tuple, move: str, open_cells) -> tuple:
    dr, dc = MOVES[move]
    nxt = (cell[0] + dr, cell[1] + dc)
    return nxt if nxt in open_cells else cell


def add_label(row: dict, target: str, label) -> None:
    """Accumulate ``label`` on ``target``; outcomes that land on the same successor merge."""
    if not isinstance(label, Polynomial):
        label = Polynomial.const(Fraction(label))
    row[target] = row.get(target, Polynomial()) + label


def slip_row(cell, move, open_cells, name, x: Polynomial) -> dict:
    """Intended move with probability 1 - x, stay with probability x; blocked moves stay surely."""
    row: dict = {}
    nxt = step(cell, move, open_cells)
    if nxt == cell:
        add_label(row, name(cell), 1)
    else:
        add_label(row, name(nxt), 1 - x)
        add_label(row, name(cell), x)
    return row
