"""Datasets, counts, MLE-MDPs, uncertainty sets and the SPIBB policy."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .pmdp import Mdp
from .solve import greedy, policy_evaluation, policy_iteration


@dataclass(frozen=True)
class Dataset:
    """Ordered ``(s, a, s')`` index triples plus episode starts."""

    triples: np.ndarray
    episodes: tuple = (0,)
    env: str = ""
    seed: int = 0
    behavior: str = ""

    def __post_init__(self):
        arr = np.asarray(self.triples, dtype=np.int64).reshape(-1, 3)
        object.__setattr__(self, "triples", arr)

    def __len__(self):
        return len(self.triples)

    def prefix(self, n: int) -> "Dataset":
        eps = tuple(e for e in self.episodes if e < n) or (0,)
        return Dataset(self.triples[:n], eps, self.env, self.seed, self.behavior)


@dataclass(frozen=True)
class CountTable:
    n_sa: np.ndarray
    n_sas: np.ndarray

    def __post_init__(self):
        if not np.array_equal(self.n_sas.sum(axis=2), self.n_sa):
            raise ValueError("n_sa must equal the row sums of n_sas")


@dataclass(frozen=True)
class UncertaintySet:
    """Boolean ``(S, A)`` mask of bootstrapped pairs."""

    mask: np.ndarray

    @property
    def pairs(self) -> frozenset:
        return frozenset((int(s), int(a)) for s, a in np.argwhere(self.mask))

    def __contains__(self, pair) -> bool:
        return bool(self.mask[pair])

    def __len__(self):
        return int(self.mask.sum())

    def issubset(self, other: "UncertaintySet") -> bool:
        return not (self.mask & ~other.mask).any()


def count(d: Dataset, n_states: int, n_actions: int) -> CountTable:
    n_sas = np.zeros((n_states, n_actions, n_states), dtype=np.int64)
    if len(d):
        t = d.triples
        np.add.at(n_sas, (t[:, 0], t[:, 1], t[:, 2]), 1)
    return CountTable(n_sas.sum(axis=2), n_sas)


def mle_mdp(c: CountTable, skeleton: Mdp, allowed: np.ndarray | None = None) -> Mdp:
    """Empirical transition frequencies; pairs without data are disabled.

    ``allowed`` optionally restricts the action set further (pruned pairs).
    """
    enabled = skeleton.enabled & (c.n_sa > 0)
    if allowed is not None:
        enabled &= allowed
    denom = np.where(c.n_sa > 0, c.n_sa, 1)[:, :, None]
    P = np.where(enabled[:, :, None], c.n_sas / denom, 0.0)
    return Mdp(skeleton.states, skeleton.actions, skeleton.initial, P, skeleton.R,
               skeleton.gamma, enabled, skeleton.transient, skeleton.name + "-mle")


def uncertainty_set(c: CountTable, n_wedge: int, skeleton: Mdp) -> UncertaintySet:
    return UncertaintySet(skeleton.enabled & (c.n_sa < n_wedge))


def _project(pi_b, boot_mask, cand, Q, current=None):
    """Bootstrapped mass stays on ``pi_b``; the rest goes to the best candidate."""
    S, A = pi_b.shape
    boot = np.where(boot_mask, pi_b, 0.0)
    free = 1.0 - boot.sum(axis=1)
    pi = boot.copy()
    has_cand = cand.any(axis=1)
    if has_cand.any():
        g = greedy(np.where(cand, Q, -np.inf), cand, current=current)
        rows = np.flatnonzero(has_cand)
        pi[rows] += free[rows, None] * g[rows]
    # no usable action: renormalise the bootstrapped part, or fall back to pi_b
    rest = ~has_cand
    bsum = boot.sum(axis=1)
    renorm = rest & (bsum > 0)
    pi[renorm] = boot[renorm] / bsum[renorm, None]
    fallback = rest & (bsum == 0)
    pi[fallback] = pi_b[fallback]
    return pi


def spibb_policy(mle: Mdp, pi_b: np.ndarray, u: UncertaintySet, pruned: np.ndarray | None = None,
                 one_shot: bool = False, max_iter: int = 1000) -> np.ndarray:
    """Improved policy pi_I.

    The first iterate applies the bootstrapping rule with the optimal Q of the
    MLE-MDP.  Unless ``one_shot`` is set, the rule is then re-applied with the
    Q-values of the current iterate until the policy stops changing, which is
    policy iteration restricted to policies that copy ``pi_b`` on ``u``.

    Pairs in ``pruned`` are never played; their behaviour mass goes to the
    greedy candidate.
    """
    pi_b = np.asarray(pi_b, dtype=float)
    pruned = np.zeros_like(u.mask) if pruned is None else pruned
    boot_mask = u.mask & ~pruned
    cand = ~u.mask & ~pruned & mle.enabled
    _, vt = policy_iteration(mle)
    pi = _project(pi_b, boot_mask, cand, vt.Q)
    if one_shot:
        return pi
    for _ in range(max_iter):
        q = policy_evaluation(mle, pi).Q
        det = np.where(cand, pi, 0.0)
        new = _project(pi_b, boot_mask, cand, q, current=det if det.any() else None)
        if np.allclose(new, pi, rtol=0, atol=0):
            return new
        pi = new
    return pi


def behavior_mass_on(pi: np.ndarray, mask: np.ndarray) -> np.ndarray:
    return np.where(mask, pi, 0.0).sum(axis=1)


# text format -------------------------------------------------------------

def serialize_dataset(d: Dataset, states, actions) -> str:
    out = [f"dataset {d.env or 'unknown'} {d.seed}"]
    starts = set(d.episodes)
    for i, (s, a, t) in enumerate(d.triples):
        if i in starts:
            out.append("episode")
        out.append(f"step {states[s]} {actions[a]} {states[t]}")
    return "\n".join(out) + "\n"


def parse_dataset(text: str, states, actions) -> Dataset:
    from .modelio import FormatError

    sidx = {n: i for i, n in enumerate(states)}
    aidx = {n: i for i, n in enumerate(actions)}
    env, seed = "", 0
    triples, episodes = [], []
    seen_header = False
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "dataset":
            if len(parts) != 3:
                raise FormatError(lineno, "expected `dataset <env> <seed>`")
            env, seed, seen_header = parts[1], int(parts[2]), True
        elif parts[0] == "episode":
            episodes.append(len(triples))
        elif parts[0] == "step":
            if len(parts) != 4:
                raise FormatError(lineno, "expected `step <s> <a> <s'>`")
            try:
                triples.append((sidx[parts[1]], aidx[parts[2]], sidx[parts[3]]))
            except KeyError as exc:
                raise FormatError(lineno, f"unknown name {exc.args[0]!r}") from None
        else:
            raise FormatError(lineno, f"unknown directive {parts[0]!r}")
    if not seen_header:
        raise FormatError(1, "missing dataset header")
    return Dataset(np.array(triples, dtype=np.int64).reshape(-1, 3),
                   tuple(sorted(set(episodes))) or (0,), env, seed)
