"""Qualitative (probability-one) reachability on support graphs.

Targets are transitions ``(s, a, s')``.  Each target transition is redirected
to a virtual goal node, which is the same as subdividing it with a marker
state that leads to the goal.  The winning region is the usual greatest
fixpoint: repeatedly keep the states that can reach the goal while only
using actions whose successors all stay inside the current region.
"""

from __future__ import annotations

from collections import deque


def _graph(pairs: dict, targets) -> dict:
    goal = "goal"
    targets = set(targets)
    g = {}
    for (s, a), succ in pairs.items():
        g[(s, a)] = sorted({goal if (s, a, t) in targets else t for t in succ}, key=str)
    return g


def almost_sure_region(pairs: dict, targets) -> tuple:
    """Winning region and attractor ranks.

    ``pairs`` maps ``(s, a)`` to an iterable of successor states (the
    support).  Returns ``(region, rank)`` where ``region`` is the set of
    states from which some policy traverses a target transition with
    probability one, and ``rank`` maps each winning state to a witnessing
    action that moves strictly closer to the goal in the attractor order.
    """
    goal = "goal"
    g = _graph(pairs, targets)
    states = {s for s, _ in g} | {t for succ in g.values() for t in succ if t != goal}
    region = set(states) | {goal}
    while True:
        allowed = {k: v for k, v in g.items() if k[0] in region and all(t in region for t in v)}
        preds: dict = {}
        for (s, a), succ in allowed.items():
            for t in succ:
                preds.setdefault(t, []).append((s, a))
        reached = {goal}
        witness: dict = {}
        queue = deque([goal])
        while queue:
            t = queue.popleft()
            for (s, a) in preds.get(t, ()):
                if s not in reached:
                    reached.add(s)
                    witness[s] = a
                    queue.append(s)
        if reached == region:
            return region - {goal}, witness
        region = reached


def almost_sure_hit(pairs: dict, targets, start) -> bool:
    region, _ = almost_sure_region(pairs, targets)
    return start in region


def support_pairs(m) -> dict:
    """``(s, a) -> successors`` for a PMdp."""
    return {k: sorted(v) for k, v in m.trans.items()}
