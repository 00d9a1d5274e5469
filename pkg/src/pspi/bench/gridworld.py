"""Slippery grid world with one slip parameter shared by every move."""

from __future__ import annotations

from fractions import Fraction

from ..pmdp import PMdp, build_pmdp
from ..polynomial import Polynomial
from ._grid import MOVE_NAMES, slip_row


def cell_name(cell) -> str:
    return f"r{cell[0]}c{cell[1]}"


def build_gridworld(size: int = 5, gamma=Fraction(19, 20), step_reward=-1) -> PMdp:
    """``size`` x ``size`` grid, start bottom-left, absorbing goal top-right.

    Every move that is not blocked by the border reaches the intended cell
    with probability ``1 - x`` and stays put with probability ``x``.
    """
    cells = [(r, c) for r in range(size) for c in range(size)]
    open_cells = set(cells)
    goal, start = (0, size - 1), (size - 1, 0)
    x = Polynomial.var("x")
    trans, rewards = {}, {}
    for cell in cells:
        s = cell_name(cell)
        if cell == goal:
            trans[(s, "up")] = {s: 1}
            continue
        for mv in MOVE_NAMES:
            trans[(s, mv)] = slip_row(cell, mv, open_cells, cell_name, x)
            rewards[(s, mv)] = step_reward
    return build_pmdp(f"gridworld{size}", [cell_name(c) for c in cells], MOVE_NAMES,
                      cell_name(start), trans, rewards, gamma, params=["x"])
