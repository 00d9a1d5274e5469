"""Exact tabular solvers: value iteration, policy evaluation, policy iteration.

Policies are ``(S, A)`` arrays of action probabilities.  Disabled pairs have
``Q = nan``.  States without enabled actions are absorbing with value 0.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pmdp import Mdp

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 10**6


class ConvergenceError(RuntimeError):
    def __init__(self, msg, residual):
        super().__init__(f"{msg} (residual {residual:.3e})")
        self.residual = residual


@dataclass(frozen=True)
class ValueTable:
    V: np.ndarray
    Q: np.ndarray

    def value(self, s: int) -> float:
        return float(self.V[s])


def effective_dynamics(m: Mdp) -> np.ndarray:
    """Transition tensor with transient states folded into their predecessors."""
    if not m.transient:
        return m.P
    P = m.P.copy()
    for f in sorted(m.transient):
        if not m.enabled[f].any():
            continue
        a0 = int(np.flatnonzero(m.enabled[f])[0])
        through = P[:, :, f].copy()
        P[:, :, f] = 0.0
        P += through[:, :, None] * m.P[f, a0][None, None, :]
    return P


def _fill_transient(m: Mdp, V: np.ndarray) -> np.ndarray:
    for f in sorted(m.transient):
        if m.enabled[f].any():
            a0 = int(np.flatnonzero(m.enabled[f])[0])
            V[f] = m.P[f, a0] @ V
    return V


def _q_from_v(m: Mdp, P: np.ndarray, V: np.ndarray) -> np.ndarray:
    Q = m.R + m.gamma * (P @ V)
    return np.where(m.enabled, Q, np.nan)


def _max_q(Q: np.ndarray, enabled: np.ndarray) -> np.ndarray:
    masked = np.where(enabled, Q, -np.inf)
    V = masked.max(axis=1)
    return np.where(enabled.any(axis=1), V, 0.0)


def value_iteration(m: Mdp, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
                    callback=None) -> ValueTable:
    """Optimal values from the all-zero start; stops once the Bellman residual is below ``tol``."""
    P = effective_dynamics(m)
    V = np.zeros(m.n_states)
    residual = np.inf
    for i in range(max_iter):
        Q = _q_from_v(m, P, V)
        V_new = _max_q(Q, m.enabled)
        if m.transient:
            V_new[list(m.transient)] = 0.0
        residual = float(np.max(np.abs(V_new - V), initial=0.0))
        V = V_new
        if callback is not None:
            callback(i, V)
        if residual <= tol:
            Q = _q_from_v(m, P, V)
            return ValueTable(_fill_transient(m, V), Q)
    raise ConvergenceError("value iteration did not converge", residual)


def check_policy(m: Mdp, pi: np.ndarray, tol: float = 1e-9) -> None:
    if pi.shape != (m.n_states, m.n_actions):
        raise ValueError("policy shape does not match the model")
    if (pi < 0).any():
        raise ValueError("negative action probability")
    has = m.enabled.any(axis=1)
    sums = pi.sum(axis=1)
    if (np.abs(sums[has] - 1.0) > tol).any():
        raise ValueError("policy rows must sum to one")


def policy_evaluation(m: Mdp, pi: np.ndarray, tol: float = DEFAULT_TOL,
                      max_iter: int = DEFAULT_MAX_ITER, method: str = "direct") -> ValueTable:
    """V^pi and Q^pi.

    ``method="direct"`` solves ``(I - gamma P_pi) V = R_pi``; ``"iterative"``
    runs the expectation backup to residual ``tol``.  Mass a policy puts on a
    disabled pair (one never observed in an estimated model) earns its reward
    and leaves the agent where it is.  Treating it as termination instead
    would let the improvement step exploit a free exit whenever rewards are
    negative.
    """
    P = effective_dynamics(m)
    pi = np.asarray(pi, dtype=float)
    R = np.where(m.enabled | (pi > 0), m.R, 0.0)
    R_pi = np.einsum("sa,sa->s", pi, R)
    P_pi = np.einsum("sa,sat->st", pi, P)
    stay = np.where(m.enabled, 0.0, pi).sum(axis=1)
    P_pi[np.diag_indices_from(P_pi)] += stay
    if m.transient:
        tr = list(m.transient)
        R_pi[tr] = 0.0
        P_pi[tr] = 0.0
    if method == "direct":
        V = np.linalg.solve(np.eye(m.n_states) - m.gamma * P_pi, R_pi)
    elif method == "iterative":
        V = np.zeros(m.n_states)
        for _ in range(max_iter):
            V_new = R_pi + m.gamma * (P_pi @ V)
            residual = float(np.max(np.abs(V_new - V), initial=0.0))
            V = V_new
            if residual <= tol:
                break
        else:
            raise ConvergenceError("policy evaluation did not converge", residual)
    else:
        raise ValueError(f"unknown method {method!r}")
    V = _fill_transient(m, V)
    return ValueTable(V, _q_from_v(m, P, V))


def greedy(Q: np.ndarray, enabled: np.ndarray, current: np.ndarray | None = None,
           atol: float = 1e-12) -> np.ndarray:
    """Deterministic greedy policy; lowest index wins ties, the current action is kept when tied."""
    S, A = Q.shape
    masked = np.where(enabled, Q, -np.inf)
    best = masked.max(axis=1)
    scale = np.maximum(1.0, np.abs(np.where(np.isfinite(best), best, 0.0)))
    near = masked >= (best - atol * scale)[:, None]
    choice = np.argmax(near, axis=1)
    if current is not None:
        cur = np.argmax(current, axis=1)
        keep = near[np.arange(S), cur]
        choice = np.where(keep, cur, choice)
    pi = np.zeros((S, A))
    has = enabled.any(axis=1)
    pi[np.arange(S)[has], choice[has]] = 1.0
    # states without actions keep an all-zero row
    return pi


def policy_iteration(m: Mdp, max_iter: int = 10_000) -> tuple:
    """Deterministic optimal policy and its exact evaluation."""
    pi = greedy(np.zeros((m.n_states, m.n_actions)), m.enabled)
    for _ in range(max_iter):
        vt = policy_evaluation(m, pi)
        new = greedy(vt.Q, m.enabled, current=pi)
        if np.array_equal(new, pi):
            return pi, vt
        pi = new
    raise ConvergenceError("policy iteration did not stabilise", float("nan"))


def uniform_policy(m: Mdp) -> np.ndarray:
    counts = m.enabled.sum(axis=1, keepdims=True)
    return np.where(m.enabled, 1.0 / np.maximum(counts, 1), 0.0)
