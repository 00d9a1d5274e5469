"""Random small pMDPs and graph-preserving valuations, for property checks and demos.

Labels come from a few fixed shapes over the parameters ``x`` and ``y``:
constants, ``{x, 1-x}``, ``{x, y, 1-x-y}``, ``{x^2, 1-x^2}`` and
``{x*y, 1-x*y}``.  Any point of the open simplex ``x, y > 0, x + y < 1`` is
then graph-preserving.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .pmdp import PMdp, build_pmdp
from .polynomial import Polynomial

X, Y = Polynomial.var("x"), Polynomial.var("y")
SHAPES2 = ((X, 1 - X), (X * X, 1 - X * X), (X * Y, 1 - X * Y))
SHAPES3 = ((X, Y, 1 - X - Y),)
GAMMAS = (Fraction(1, 2), Fraction(3, 4), Fraction(9, 10))


def _constant_row(rng: np.random.Generator, k: int) -> list:
    cuts = sorted(rng.choice(np.arange(1, 8), size=k - 1, replace=False).tolist())
    parts = np.diff([0] + cuts + [8]).tolist()
    return [Polynomial.const(Fraction(p, 8)) for p in parts]


def random_pmdp(rng: np.random.Generator, n_states: int | None = None, n_actions: int = 3,
                p_param: float = 0.6, max_support: int = 3, reward_range: int = 5,
                gamma=None, name: str = "random") -> PMdp:
    n_states = int(rng.integers(2, 7)) if n_states is None else n_states
    states = [f"s{i}" for i in range(n_states)]
    actions = [f"a{j}" for j in range(n_actions)]
    trans, rewards = {}, {}
    for s in range(n_states):
        k_act = int(rng.integers(1, n_actions + 1))
        for a in sorted(rng.choice(n_actions, size=k_act, replace=False).tolist()):
            k = int(rng.integers(1, min(max_support, n_states) + 1))
            succ = rng.choice(n_states, size=k, replace=False).tolist()
            if k == 1:
                labels = [Polynomial.const(1)]
            elif rng.random() < p_param:
                pool = SHAPES2 if k == 2 else SHAPES3
                labels = list(pool[int(rng.integers(len(pool)))])
            else:
                labels = _constant_row(rng, k)
            trans[(states[s], actions[a])] = dict(zip((states[t] for t in succ), labels))
            rewards[(states[s], actions[a])] = int(rng.integers(-reward_range, reward_range + 1))
    used = sorted({v for row in trans.values() for p in row.values() for v in p.variables})
    gamma = GAMMAS[int(rng.integers(len(GAMMAS)))] if gamma is None else Fraction(gamma)
    return build_pmdp(name, states, actions, "s0", trans, rewards, gamma, params=used,
                      rmax=reward_range)


def random_valuation(m: PMdp, rng: np.random.Generator, margin: float = 1e-3) -> dict:
    """A point strictly inside the simplex for ``x`` and ``y``."""
    while True:
        x, y, z = rng.dirichlet((1.0, 1.0, 1.0))
        if min(x, y, z) > margin:
            break
    full = {"x": float(x), "y": float(y)}
    return {p: full[p] for p in m.params}
