"""Parametric MDPs, concrete MDPs, and instantiation.

States and actions carry string names; internally everything is indexed by
dense integers.  A :class:`PMdp` stores its transition function sparsely as
``trans[(s, a)] = {s': Polynomial}``; a pair is enabled iff it has an entry.
A :class:`Mdp` stores dense numpy arrays, which is what the solvers and the
SPIBB machinery consume.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np

from .polynomial import Polynomial, sum_polynomials

ROW_TOL = 1e-9


class ModelError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class PMdp:
    name: str
    states: tuple
    actions: tuple
    initial: int
    params: tuple
    trans: Mapping  # (s, a) -> {s': Polynomial}
    reward: Mapping  # (s, a) -> Fraction
    gamma: Fraction
    rmax: Fraction
    transient: frozenset = frozenset()

    def __post_init__(self):
        if not (0 < self.gamma < 1):
            raise ModelError(f"gamma must lie in (0, 1), got {self.gamma}")
        if not self.states:
            raise ModelError("model has no states")
        if not 0 <= self.initial < len(self.states):
            raise ModelError("initial state out of range")
        known = set(self.params)
        for (s, a), row in self.trans.items():
            if not row:
                raise ModelError(f"enabled pair ({self.states[s]}, {self.actions[a]}) has empty support")
            for t, poly in row.items():
                if poly.is_zero():
                    raise ModelError(f"zero label stored on ({self.states[s]}, {self.actions[a]}, {self.states[t]})")
                extra = poly.variables - known
                if extra:
                    raise ModelError(f"undeclared parameters {sorted(extra)} in transition labels")
        for (s, a), r in self.reward.items():
            if abs(r) > self.rmax:
                raise ModelError(
                    f"reward {r} of ({self.states[s]}, {self.actions[a]}) exceeds rmax {self.rmax}")
        for s in range(len(self.states)):
            if not self.enabled(s):
                raise ModelError(f"state {self.states[s]} has no enabled action")

    # structure ----------------------------------------------------------
    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    def enabled(self, s: int) -> list:
        cache = self.__dict__.get("_enabled_cache")
        if cache is None:
            cache = [[] for _ in self.states]
            for (q, b) in sorted(self.trans):
                cache[q].append(b)
            object.__setattr__(self, "_enabled_cache", cache)
        return cache[s]

    def pairs(self) -> list:
        return sorted(self.trans)

    def support(self, s: int, a: int) -> list:
        return sorted(self.trans[(s, a)])

    def label(self, s: int, a: int, t: int) -> Polynomial:
        return self.trans.get((s, a), {}).get(t, Polynomial())

    def r(self, s: int, a: int) -> Fraction:
        return self.reward.get((s, a), Fraction(0))

    def state_index(self, name: str) -> int:
        try:
            return self.states.index(name)
        except ValueError:
            raise ModelError(f"unknown state {name!r}") from None

    def action_index(self, name: str) -> int:
        try:
            return self.actions.index(name)
        except ValueError:
            raise ModelError(f"unknown action {name!r}") from None

    def remove_pairs(self, pairs: Iterable) -> "PMdp":
        """Sub-model without the given ``(s, a)`` pairs."""
        drop = set(pairs)
        trans = {k: v for k, v in self.trans.items() if k not in drop}
        reward = {k: v for k, v in self.reward.items() if k not in drop}
        return PMdp(self.name, self.states, self.actions, self.initial, self.params,
                    trans, reward, self.gamma, self.rmax, self.transient)

    def canonical_equal(self, other: "PMdp") -> bool:
        return (self.name == other.name and self.states == other.states
                and self.actions == other.actions and self.initial == other.initial
                and tuple(self.params) == tuple(other.params) and self.gamma == other.gamma
                and self.rmax == other.rmax
                and {k: dict(v) for k, v in self.trans.items()}
                == {k: dict(v) for k, v in other.trans.items()}
                and {k: v for k, v in self.reward.items() if v != 0}
                == {k: v for k, v in other.reward.items() if v != 0}
                and self.transient == other.transient)


@dataclass(frozen=True, eq=False)
class Mdp:
    """Concrete tabular MDP.

    ``P[s, a]`` is a probability row for enabled pairs and all zeros for
    disabled ones.  States in ``transient`` were inserted by
    :func:`normalize_distinct_labels`; solvers pass through them without
    reward or discount.
    """

    states: tuple
    actions: tuple
    initial: int
    P: np.ndarray
    R: np.ndarray
    gamma: float
    enabled: np.ndarray
    transient: frozenset = frozenset()
    name: str = ""

    def __post_init__(self):
        S, A = len(self.states), len(self.actions)
        if self.P.shape != (S, A, S) or self.R.shape != (S, A) or self.enabled.shape != (S, A):
            raise ModelError("array shapes do not match the state/action sets")
        if not 0 < self.gamma < 1:
            raise ModelError("gamma must lie in (0, 1)")
        sums = self.P.sum(axis=2)
        bad = self.enabled & (np.abs(sums - 1.0) > ROW_TOL)
        if bad.any():
            s, a = np.argwhere(bad)[0]
            raise ModelError(f"row ({self.states[s]}, {self.actions[a]}) sums to {sums[s, a]}")
        if (self.P < 0).any():
            raise ModelError("negative transition probability")

    @property
    def n_states(self) -> int:
        return len(self.states)

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    @property
    def rmax(self) -> float:
        return float(np.abs(self.R[self.enabled]).max(initial=0.0))

    def with_enabled(self, enabled: np.ndarray) -> "Mdp":
        P = np.where(enabled[:, :, None], self.P, 0.0)
        return Mdp(self.states, self.actions, self.initial, P, self.R, self.gamma,
                   enabled.copy(), self.transient, self.name)

    def absorbing(self) -> np.ndarray:
        """Boolean mask of states whose every enabled action self-loops surely."""
        S = self.n_states
        idx = np.arange(S)
        loops = self.P[idx, :, idx] >= 1.0 - ROW_TOL
        has = self.enabled.any(axis=1)
        return has & np.all(loops | ~self.enabled, axis=1)


def valuation_complete(m: PMdp, v: Mapping) -> None:
    missing = [x for x in m.params if x not in v]
    if missing:
        raise ModelError(f"valuation misses parameters {missing}")


def is_graph_preserving(m: PMdp, v: Mapping, tol: float = ROW_TOL) -> bool:
    """Rows sum to one, entries lie in [0, 1], labelled entries are strictly positive."""
    valuation_complete(m, v)
    for row in m.trans.values():
        total = 0.0
        for poly in row.values():
            p = poly.evaluate(v)
            if not (0.0 < p <= 1.0 + tol):
                return False
            total += p
        if abs(total - 1.0) > tol:
            return False
    return True


def instantiate(m: PMdp, v: Mapping, tol: float = ROW_TOL) -> Mdp:
    if not is_graph_preserving(m, v, tol):
        raise ModelError("valuation is not graph-preserving")
    S, A = m.n_states, m.n_actions
    P = np.zeros((S, A, S))
    R = np.zeros((S, A))
    enabled = np.zeros((S, A), dtype=bool)
    cache: dict = {}
    for (s, a), row in m.trans.items():
        enabled[s, a] = True
        R[s, a] = float(m.r(s, a))
        for t, poly in row.items():
            val = cache.get(poly)
            if val is None:
                val = cache[poly] = poly.evaluate(v)
            P[s, a, t] = val
        # absorb float drift so rows are stochastic to machine precision
        P[s, a] /= P[s, a].sum()
    return Mdp(m.states, m.actions, m.initial, P, R, float(m.gamma), enabled,
               m.transient, m.name)


def normalize_distinct_labels(m: PMdp) -> PMdp:
    """Route identically-labelled successors through a fresh uniform-split state.

    Only non-constant labels are considered: a repeated constant mentions no
    parameter and is never tied, so it needs no splitting.  The fresh state is marked transient so that the two hops count as one
    discounted step.  Models without duplicate labels are returned as is.
    """
    states = list(m.states)
    trans = {k: dict(v) for k, v in m.trans.items()}
    transient = set(m.transient)
    changed = False
    for (s, a) in sorted(m.trans):
        groups: dict = {}
        for t, poly in m.trans[(s, a)].items():
            groups.setdefault(poly, []).append(t)
        for poly, members in groups.items():
            if len(members) < 2 or poly.is_constant():
                continue
            changed = True
            fresh = len(states)
            states.append(f"{m.states[s]}~{m.actions[a]}~{len(members)}~{fresh}")
            transient.add(fresh)
            row = trans[(s, a)]
            for t in members:
                del row[t]
            row[fresh] = poly * len(members)
            share = Polynomial.const(Fraction(1, len(members)))
            trans[(fresh, 0)] = {t: share for t in sorted(members)}
    if not changed:
        return m
    return PMdp(m.name, tuple(states), m.actions, m.initial, m.params, trans,
                dict(m.reward), m.gamma, m.rmax, frozenset(transient))


def has_distinct_labels(m: PMdp, pairs: Iterable | None = None) -> bool:
    keys = m.trans if pairs is None else pairs
    for key in keys:
        labels = [p for p in m.trans[key].values() if not p.is_constant()]
        if len(set(labels)) != len(labels):
            return False
    return True


def row_sum(m: PMdp, s: int, a: int) -> Polynomial:
    return sum_polynomials(m.trans[(s, a)].values())


def constant_mdp(m: PMdp) -> Mdp:
    """Instantiate a model whose labels are all constants."""
    return instantiate(m, {})


def build_pmdp(name, states, actions, initial, transitions, rewards=None, gamma=Fraction(19, 20),
               params=(), rmax=None) -> PMdp:
    """Convenience constructor from name-keyed data.

    ``transitions`` maps ``(state, action)`` to ``{successor: label}`` where a
    label is a :class:`Polynomial`, an int/Fraction, or a string expression.
    """
    from .polynomial import parse_polynomial

    states = tuple(states)
    actions = tuple(actions)
    sidx = {n: i for i, n in enumerate(states)}
    aidx = {n: i for i, n in enumerate(actions)}
    trans = {}
    for (s, a), row in transitions.items():
        out = {}
        for t, lab in row.items():
            if isinstance(lab, str):
                lab = parse_polynomial(lab)
            elif not isinstance(lab, Polynomial):
                lab = Polynomial.const(Fraction(lab))
            if not lab.is_zero():
                out[sidx[t]] = lab
        trans[(sidx[s], aidx[a])] = out
    reward = {}
    for (s, a), r in (rewards or {}).items():
        reward[(sidx[s], aidx[a])] = Fraction(r)
    if rmax is None:
        rmax = max((abs(r) for r in reward.values()), default=Fraction(0))
    gamma = Fraction(gamma)
    return PMdp(name, states, actions, sidx[initial] if isinstance(initial, str) else initial,
                tuple(params), trans, reward, gamma, Fraction(rmax))


def skeleton_mdp(m: PMdp) -> Mdp:
    """Concrete MDP with the model's structure and rewards and uniform rows over each support.

    Only the shape, rewards and enabled pairs matter to the estimators that consume it.
    """
    S, A = m.n_states, m.n_actions
    P = np.zeros((S, A, S))
    R = np.zeros((S, A))
    enabled = np.zeros((S, A), dtype=bool)
    for (s, a), row in m.trans.items():
        enabled[s, a] = True
        R[s, a] = float(m.r(s, a))
        P[s, a, sorted(row)] = 1.0 / len(row)
    return Mdp(m.states, m.actions, m.initial, P, R, float(m.gamma), enabled, m.transient, m.name)
