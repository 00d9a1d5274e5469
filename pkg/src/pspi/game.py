"""Antagonistic and cooperative game values and aVal-cVal pruning.

Nature is replaced by a player who picks successors from the support of each
distribution, either against the agent (aVal) or with it (cVal).  Both
values read only the support graph of the pMDP, so they hold for every
graph-preserving valuation simultaneously.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .pmdp import PMdp
from .reach import almost_sure_region

log = logging.getLogger(__name__)

STRICT_REL = 1e-7


class GameValueError(RuntimeError):
    pass


@dataclass(frozen=True)
class GameValues:
    aval: np.ndarray
    cval: np.ndarray

    @property
    def eps(self) -> float:
        scale = max(1.0, float(np.abs(self.aval).max(initial=0)), float(np.abs(self.cval).max(initial=0)))
        return STRICT_REL * scale


class _Support:
    """Flattened support structure of the enabled pairs of a model.

    Pairs leaving a transient (inserted) state carry no discount, so the two
    hops through it count as a single step.
    """

    def __init__(self, m: PMdp, pairs=None):
        keys = sorted(m.trans) if pairs is None else sorted(pairs)
        self.keys = keys
        self.s = np.array([k[0] for k in keys], dtype=np.int64)
        self.r_exact = [m.r(*k) for k in keys]
        self.r = np.array([float(r) for r in self.r_exact])
        g = Fraction(m.gamma)
        self.g_exact = [Fraction(1) if k[0] in m.transient else g for k in keys]
        self.g = np.array([float(x) for x in self.g_exact])
        succ, offs = [], []
        for k in keys:
            offs.append(len(succ))
            succ.extend(sorted(m.trans[k]))
        self.succ = np.array(succ, dtype=np.int64)
        self.offs = np.array(offs, dtype=np.int64)
        self.ends = np.append(self.offs[1:], len(succ)).astype(np.int64)
        self.pair_of_succ = np.repeat(np.arange(len(keys)), self.ends - self.offs)
        self.n_states = m.n_states
        covered = np.zeros(m.n_states, dtype=bool)
        covered[self.s] = True
        if not covered.all():
            raise GameValueError("every state needs at least one action")
        # keys are sorted by state, so each state's pairs are contiguous
        self.state_offs = np.searchsorted(self.s, np.arange(m.n_states))
        self.state_ends = np.append(self.state_offs[1:], len(keys)).astype(np.int64)

    def successors(self, i: int) -> np.ndarray:
        return self.succ[self.offs[i]:self.ends[i]]


def _reducers(act_max: bool, succ_max: bool):
    return (np.maximum if act_max else np.minimum), (np.maximum if succ_max else np.minimum)


def _bellman(sup: _Support, V: np.ndarray, act_max: bool, succ_max: bool) -> tuple:
    act_red, succ_red = _reducers(act_max, succ_max)
    best_succ = succ_red.reduceat(V[sup.succ], sup.offs)
    pv = sup.r + sup.g * best_succ
    return act_red.reduceat(pv, sup.state_offs), pv, best_succ


def _solve(sup: _Support, act_max: bool, succ_max: bool, tol: float, max_iter: int) -> np.ndarray:
    V = np.zeros(sup.n_states)
    residual = np.inf
    for _ in range(max_iter):
        V_new = _bellman(sup, V, act_max, succ_max)[0]
        residual = float(np.max(np.abs(V_new - V)))
        V = V_new
        if residual <= tol:
            return _polish(sup, V, act_max, succ_max)
    raise GameValueError(f"game values did not converge (residual {residual:.3e})")


def _first_hits(mask: np.ndarray, group: np.ndarray, n: int) -> np.ndarray:
    """Index of the first True entry of ``mask`` within each group."""
    out = np.full(n, -1, dtype=np.int64)
    idx = np.flatnonzero(mask)
    grp = group[idx]
    first = np.unique(grp, return_index=True)
    out[first[0]] = idx[first[1]]
    return out


def _choices(sup: _Support, V: np.ndarray, act_max: bool, succ_max: bool) -> tuple:
    """Greedy strategies of both players for the value vector ``V``."""
    best_state, pv, best_succ = _bellman(sup, V, act_max, succ_max)
    succ_pick = _first_hits(V[sup.succ] == best_succ[sup.pair_of_succ], sup.pair_of_succ, len(sup.keys))
    pair_pick = _first_hits(pv == best_state[sup.s], sup.s, sup.n_states)
    return pair_pick, sup.succ[succ_pick]


def _polish(sup: _Support, V: np.ndarray, act_max: bool, succ_max: bool) -> np.ndarray:
    """Replace the iterate by the exact value of its greedy strategies when that is a fixpoint."""
    pair_pick, succ_of_pair = _choices(sup, V, act_max, succ_max)
    n = sup.n_states
    M = np.eye(n)
    M[np.arange(n), succ_of_pair[pair_pick]] -= sup.g[pair_pick]
    try:
        W = np.linalg.solve(M, sup.r[pair_pick])
    except np.linalg.LinAlgError:
        return V
    check = _bellman(sup, W, act_max, succ_max)[0]
    if np.max(np.abs(check - W)) <= 1e-9 * max(1.0, float(np.abs(W).max())):
        return W
    return V


def _restrict(m: PMdp, pi) -> list:
    if pi is None:
        return None
    pi = np.asarray(pi)
    return [k for k in sorted(m.trans) if pi[k] > 0]


def aval_cval(m: PMdp, tol: float = 1e-10, max_iter: int = 10**6) -> GameValues:
    sup = _Support(m)
    return GameValues(_solve(sup, True, False, tol, max_iter), _solve(sup, True, True, tol, max_iter))


def aval_cval_policy(m: PMdp, pi, tol: float = 1e-10, max_iter: int = 10**6) -> GameValues:
    """Values when the agent is restricted to the support of ``pi``.

    Both the action inside the support and the successor are resolved by
    nature: adversarially for aVal, cooperatively for cVal.
    """
    sup = _Support(m, _restrict(m, pi))
    return GameValues(_solve(sup, False, False, tol, max_iter), _solve(sup, True, True, tol, max_iter))


def _exact_values(m: PMdp, succ_max: bool, tol: float = 1e-10) -> list:
    """Game values as exact fractions, certified against the Bellman equations."""
    sup = _Support(m)
    V = _solve(sup, True, succ_max, tol, 10**6)
    for _ in range(100):
        pair_pick, succ_of_pair = _choices(sup, V, True, succ_max)
        nxt = [int(succ_of_pair[p]) for p in pair_pick]
        W = _functional_graph_values(nxt, [sup.r_exact[p] for p in pair_pick],
                                     [sup.g_exact[p] for p in pair_pick])
        if _exact_fixpoint(sup, W, succ_max):
            return W
        # the greedy strategies were not optimal; improve them and try again
        V = _bellman(sup, np.array([float(w) for w in W]), True, succ_max)[0]
    raise GameValueError("could not certify exact game values")


def exact_aval(m: PMdp, tol: float = 1e-10) -> list:
    return _exact_values(m, False, tol)


def exact_game_values(m: PMdp, tol: float = 1e-10) -> tuple:
    """``(aVal, cVal)`` as lists of fractions."""
    return _exact_values(m, False, tol), _exact_values(m, True, tol)


def _functional_graph_values(nxt: list, rew: list, disc: list) -> list:
    """Values of a deterministic system s -> nxt[s] with reward and discount per state."""
    n = len(nxt)
    val: list = [None] * n
    for start in range(n):
        if val[start] is not None:
            continue
        path, pos = [], {}
        s = start
        while val[s] is None and s not in pos:
            pos[s] = len(path)
            path.append(s)
            s = nxt[s]
        if val[s] is None:
            cycle = path[pos[s]:]
            total, factor = Fraction(0), Fraction(1)
            for c in cycle:
                total += factor * rew[c]
                factor *= disc[c]
            val[cycle[0]] = total / (1 - factor)
            for c in reversed(cycle[1:]):
                val[c] = rew[c] + disc[c] * val[nxt[c]]
            path = path[:pos[s]]
        for c in reversed(path):
            val[c] = rew[c] + disc[c] * val[nxt[c]]
    return val


def _exact_fixpoint(sup: _Support, W: list, succ_max: bool) -> bool:
    pick = max if succ_max else min
    for s in range(sup.n_states):
        best = max(sup.r_exact[i] + sup.g_exact[i] * pick(W[t] for t in sup.successors(i))
                   for i in range(sup.state_offs[s], sup.state_ends[s]))
        if best != W[s]:
            return False
    return True


def _discount(m: PMdp, s: int) -> float:
    return 1.0 if s in m.transient else float(m.gamma)


def _backups(m: PMdp, values: np.ndarray, reduce) -> dict:
    return {k: float(m.r(*k)) + _discount(m, k[0]) * reduce([values[t] for t in row])
            for k, row in m.trans.items()}


def improving_transitions(m: PMdp, gv: GameValues) -> frozenset:
    eps = gv.eps
    out = set()
    for (s, a), row in m.trans.items():
        r, g = float(m.r(s, a)), _discount(m, s)
        for t in row:
            if gv.aval[s] < r + g * gv.aval[t] - eps:
                out.add((s, a, t))
    return frozenset(out)


def worst_case_subpmdp(m: PMdp, gv: GameValues) -> PMdp:
    """Keep only actions whose worst-case backup attains aVal."""
    eps = gv.eps
    worst = _backups(m, gv.aval, min)
    drop = [k for k, v in worst.items() if v < gv.aval[k[0]] - eps]
    dropped = set(drop)
    kept = {k[0] for k in m.trans if k not in dropped}
    if len(kept) != m.n_states:
        raise GameValueError("worst-case restriction emptied a state; values are not a fixpoint")
    return m.remove_pairs(drop)


def strict_bound_states(m: PMdp, gv: GameValues | None = None) -> np.ndarray:
    """States from which a worst-case optimal policy hits an improving transition almost surely."""
    gv = aval_cval(m) if gv is None else gv
    sub = worst_case_subpmdp(m, gv)
    targets = {x for x in improving_transitions(m, gv) if (x[0], x[1]) in sub.trans}
    region, _ = almost_sure_region({k: list(v) for k, v in sub.trans.items()}, targets)
    mask = np.zeros(m.n_states, dtype=bool)
    mask[sorted(region)] = True
    return mask


def strict_bound_holds(m: PMdp, s: int, gv: GameValues | None = None) -> bool:
    return bool(strict_bound_states(m, gv)[s])


@dataclass
class PruneResult:
    removed: dict = field(default_factory=dict)  # (s, a) -> "strict" | "nonstrict" | method tag
    rounds: int = 0
    skipped: list = field(default_factory=list)
    undecided: list = field(default_factory=list)  # (s, a, status) of inconclusive queries

    @property
    def pairs(self) -> frozenset:
        return frozenset(self.removed)

    def mask(self, n_states: int, n_actions: int) -> np.ndarray:
        out = np.zeros((n_states, n_actions), dtype=bool)
        for s, a in self.removed:
            out[s, a] = True
        return out

    def report(self, m: PMdp) -> str:
        lines = [f"removed {len(self.removed)} pairs in {self.rounds} rounds"]
        for (s, a), why in sorted(self.removed.items()):
            lines.append(f"remove {m.states[s]} {m.actions[a]} {why}")
        for s, a in self.skipped:
            lines.append(f"skipped {m.states[s]} {m.actions[a]} (would leave state without actions)")
        return "\n".join(lines) + "\n"


def aval_cval_candidates(m: PMdp, gv: GameValues, strict_states=None) -> dict:
    """Pairs removable in one round, with the reason."""
    eps = gv.eps
    best = _backups(m, gv.cval, max)
    out = {}
    for (s, a), ub in best.items():
        if len(m.enabled(s)) < 2:
            continue
        margin = gv.aval[s] - ub
        if margin > eps:
            out[(s, a)] = "strict"
        elif margin >= -eps:
            if strict_states is None:
                strict_states = strict_bound_states(m, gv)
            if strict_states[s]:
                out[(s, a)] = "nonstrict"
    return out


def _apply_removals(m: PMdp, cands: dict, result: PruneResult, key=None) -> PMdp:
    by_state: dict = {}
    for (s, a) in sorted(cands):
        by_state.setdefault(s, []).append(a)
    drop = []
    for s, acts in by_state.items():
        if len(acts) >= len(m.enabled(s)):
            # keep the pair with the largest upper bound
            keep = acts[-1] if key is None else max(acts, key=lambda a: key[(s, a)])
            result.skipped.append((s, keep))
            log.warning("pruning would empty state %s; keeping action %s", m.states[s], m.actions[keep])
            acts = [a for a in acts if a != keep]
        drop.extend((s, a) for a in acts)
    for k in drop:
        result.removed[k] = cands[k]
    return m.remove_pairs(drop)


def aval_cval_prune(m: PMdp, max_rounds: int = 1000) -> tuple:
    """Remove pairs that no optimal policy uses under any graph-preserving valuation.

    Repeats until nothing changes, recomputing the game values and the
    improving transitions each round.
    """
    result = PruneResult()
    for _ in range(max_rounds):
        gv = aval_cval(m)
        cands = aval_cval_candidates(m, gv)
        if not cands:
            break
        result.rounds += 1
        ub = _backups(m, gv.cval, max)
        m = _apply_removals(m, cands, result, key=ub)
    return m, result
