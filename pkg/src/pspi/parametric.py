"""Parameter tying: label equivalence classes and pooled estimates.

Two enabled pairs are equivalent when their successor distributions carry
the same set of polynomial labels.  Two transitions are equivalent when
their pairs are equivalent and they carry the same label.  Counts are summed
over each class before building the MLE-MDP and the uncertainty set.

Distributions whose labels are all constants mention no parameter and are
kept as singleton classes unless ``tie_constants`` is set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pmdp import Mdp, ModelError, PMdp
from .spibb import CountTable, UncertaintySet, mle_mdp, spibb_policy, uncertainty_set


@dataclass(frozen=True, eq=False)
class LabelClasses:
    sa_class: np.ndarray  # (S, A) class id, -1 where disabled
    t_s: np.ndarray
    t_a: np.ndarray
    t_next: np.ndarray
    t_class: np.ndarray  # class id of each enabled transition
    n_sa_classes: int
    n_t_classes: int

    @property
    def shape(self):
        return self.sa_class.shape

    def sa_members(self, s: int, a: int) -> list:
        cid = self.sa_class[s, a]
        return [tuple(map(int, p)) for p in np.argwhere(self.sa_class == cid)] if cid >= 0 else []

    def trans_class(self, s: int, a: int, t: int) -> int:
        hit = np.flatnonzero((self.t_s == s) & (self.t_a == a) & (self.t_next == t))
        if not len(hit):
            raise KeyError((s, a, t))
        return int(self.t_class[hit[0]])

    def trans_members(self, s: int, a: int, t: int) -> list:
        cid = self.trans_class(s, a, t)
        sel = np.flatnonzero(self.t_class == cid)
        return [(int(self.t_s[i]), int(self.t_a[i]), int(self.t_next[i])) for i in sel]

    def all_singletons(self) -> bool:
        sizes = np.bincount(self.sa_class[self.sa_class >= 0], minlength=self.n_sa_classes)
        return bool((sizes <= 1).all())


def label_classes(m: PMdp, tie_constants: bool = False) -> LabelClasses:
    S, A = m.n_states, m.n_actions
    sa_class = np.full((S, A), -1, dtype=np.int64)
    sa_ids: dict = {}
    t_ids: dict = {}
    ts, ta, tn, tc = [], [], [], []
    for (s, a) in sorted(m.trans):
        row = m.trans[(s, a)]
        labels = list(row.values())
        constant = all(p.is_constant() for p in labels)
        tied = tie_constants or not constant
        if tied and len(set(labels)) != len(labels):
            raise ModelError(
                f"pair ({m.states[s]}, {m.actions[a]}) repeats a label; "
                "apply normalize_distinct_labels first")
        key = frozenset(labels) if tied else ("single", s, a)
        cid = sa_ids.setdefault(key, len(sa_ids))
        sa_class[s, a] = cid
        for t in sorted(row):
            tkey = (cid, row[t]) if tied else (cid, t)
            ts.append(s)
            ta.append(a)
            tn.append(t)
            tc.append(t_ids.setdefault(tkey, len(t_ids)))
    arr = lambda x: np.asarray(x, dtype=np.int64)
    return LabelClasses(sa_class, arr(ts), arr(ta), arr(tn), arr(tc), len(sa_ids), len(t_ids))


def pooled_counts(c: CountTable, lc: LabelClasses) -> CountTable:
    S, A = lc.shape
    enabled = lc.sa_class >= 0
    den_by_class = np.bincount(lc.sa_class[enabled], weights=c.n_sa[enabled],
                               minlength=lc.n_sa_classes).astype(np.int64)
    n_sa = np.where(enabled, den_by_class[np.maximum(lc.sa_class, 0)], c.n_sa)
    raw = c.n_sas[lc.t_s, lc.t_a, lc.t_next]
    num_by_class = np.bincount(lc.t_class, weights=raw, minlength=lc.n_t_classes).astype(np.int64)
    n_sas = np.where(enabled[:, :, None], 0, c.n_sas)
    n_sas[lc.t_s, lc.t_a, lc.t_next] = num_by_class[lc.t_class]
    return CountTable(n_sa, n_sas)


def parametric_mle(c: CountTable, lc: LabelClasses, skeleton: Mdp,
                   allowed: np.ndarray | None = None) -> Mdp:
    return mle_mdp(pooled_counts(c, lc), skeleton, allowed)


def parametric_uncertainty_set(c: CountTable, lc: LabelClasses, n_wedge: int,
                               skeleton: Mdp) -> UncertaintySet:
    return uncertainty_set(pooled_counts(c, lc), n_wedge, skeleton)


def pspibb_policy(lc: LabelClasses, c: CountTable, pi_b: np.ndarray, n_wedge: int,
                  skeleton: Mdp, pruned: np.ndarray | None = None,
                  one_shot: bool = False) -> np.ndarray:
    pooled = pooled_counts(c, lc)
    allowed = None if pruned is None else ~pruned
    mle = mle_mdp(pooled, skeleton, allowed)
    u = uncertainty_set(pooled, n_wedge, skeleton)
    return spibb_policy(mle, pi_b, u, pruned=pruned, one_shot=one_shot)
