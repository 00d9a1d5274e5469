"""Regularized incomplete beta, its inverse, and the SPIBB zeta / N-wedge bounds."""

from __future__ import annotations

import math
from typing import NamedTuple

_EPS = 1e-16
_TINY = 1e-300


def _betacf(a: float, b: float, x: float, max_iter: int = 1_000_000) -> float:
    # modified Lentz evaluation of the incomplete beta continued fraction
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c, d = 1.0, 1.0 - qab * x / qap
    d = 1.0 / (d if abs(d) > _TINY else _TINY)
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > _TINY else _TINY)
        c = 1.0 + aa / c
        c = c if abs(c) > _TINY else _TINY
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        d = 1.0 / (d if abs(d) > _TINY else _TINY)
        c = 1.0 + aa / c
        c = c if abs(c) > _TINY else _TINY
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            return h
    raise ArithmeticError("incomplete beta continued fraction did not converge")


def inc_beta(x: float, a: float, b: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if a <= 0 or b <= 0:
        raise ValueError("shape parameters must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    log_bt = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
              + a * math.log(x) + b * math.log1p(-x))
    if x < (a + 1.0) / (a + b + 2.0):
        return math.exp(log_bt) * _betacf(a, b, x) / a
    return 1.0 - math.exp(log_bt) * _betacf(b, a, 1.0 - x) / b


def inc_beta_inv(p: float, alpha: float, beta: float, xtol: float = 1e-15) -> float:
    """x with I_x(alpha, beta) = p, by bisection."""
    if not 0.0 < p < 1.0:
        raise ValueError("p must lie in (0, 1)")
    if alpha <= 0 or beta <= 0:
        raise ValueError("shape parameters must be positive")
    lo, hi = 0.0, 1.0
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if inc_beta(mid, alpha, beta) < p:
            lo = mid
        else:
            hi = mid
        if hi - lo <= xtol * max(mid, 1e-300):
            break
    return 0.5 * (lo + hi)


def delta_t(delta: float, n_states: int, n_actions: int) -> float:
    return delta / (2.0 * n_states**2 * n_actions**2)


def zeta_bound(n_wedge: float, delta: float, v_max: float, gamma: float, c: float = 0.0,
               n_states: int = 1, n_actions: int = 1) -> float:
    """Admissible performance loss for threshold ``n_wedge`` at confidence ``1 - delta``.

    ``c`` is V^{pi_B}(iota) - V^{pi_I}(iota) on the MLE-MDP (0 when unknown).
    """
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if n_wedge < 0 or v_max <= 0 or not 0.0 < gamma < 1.0:
        raise ValueError("invalid bound arguments")
    shape = n_wedge / 2.0 + 1.0
    x = inc_beta_inv(delta_t(delta, n_states, n_actions), shape, shape)
    return 4.0 * v_max / (1.0 - gamma) * (1.0 - 2.0 * x) + c


class NWedge(NamedTuple):
    n_wedge: int
    upper_bound: float


def n_wedge_upper_bound(zeta: float, delta: float, v_max: float, gamma: float,
                        n_states: int, n_actions: int) -> float:
    return (32.0 * v_max**2 / (zeta * (1.0 - gamma) ** 2)
            * math.log(8.0 * n_states**2 * n_actions**2 / delta))


class UnreachableBound(ValueError):
    pass


def n_wedge_bound(zeta: float, delta: float, v_max: float, gamma: float,
                  n_states: int, n_actions: int) -> NWedge:
    """Smallest integer threshold whose zeta bound (c = 0) does not exceed ``zeta``."""
    if zeta <= 0 or not 0.0 < delta < 1.0:
        raise ValueError("zeta must be positive and delta in (0, 1)")
    ub = n_wedge_upper_bound(zeta, delta, v_max, gamma, n_states, n_actions)

    def z(n):
        return zeta_bound(n, delta, v_max, gamma, 0.0, n_states, n_actions)

    hi = math.ceil(ub)
    if z(hi) > zeta:
        raise UnreachableBound(f"zeta {zeta} not reached below the closed-form bound {ub:.6g}")
    lo = 0
    if z(lo) <= zeta:
        return NWedge(0, ub)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if z(mid) <= zeta:
            hi = mid
        else:
            lo = mid
    return NWedge(hi, ub)
