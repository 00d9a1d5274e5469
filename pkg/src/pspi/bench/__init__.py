"""Benchmark environments and perturbed behaviour policies."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from ..pmdp import Mdp, PMdp, instantiate
from ..solve import policy_iteration
from . import gridworld, pacman, resource, rps, taxi

__all__ = ["BenchmarkSpec", "SPECS", "behavior_policy", "build", "dims_report", "get_spec"]


@dataclass(frozen=True)
class BenchmarkSpec:
    name: str
    builder: Callable
    expected_dims: tuple  # (|S|, |A|, |X|)
    alpha: Fraction
    valuation: Callable  # () -> {param: value}
    horizon: int = 200
    scheme: str = ""
    options: dict = field(default_factory=dict)

    def build(self, gamma=None) -> PMdp:
        kwargs = dict(self.options)
        if gamma is not None:
            kwargs["gamma"] = Fraction(str(gamma)) if isinstance(gamma, float) else Fraction(gamma)
        return self.builder(**kwargs)

    def true_mdp(self, m: PMdp | None = None, gamma=None) -> Mdp:
        m = self.build(gamma) if m is None else m
        return instantiate(m, {k: float(v) for k, v in self.valuation().items()})


SPECS = {
    "gridworld": BenchmarkSpec(
        "gridworld", gridworld.build_gridworld, (25, 4, 1), Fraction(1, 2),
        lambda: {"x": Fraction(1, 5)},
        scheme="5x5 grid, start bottom-left, absorbing goal top-right, reward -1 per move; "
               "each unblocked move reaches the target with 1-x and stays with x"),
    "resource_gathering": BenchmarkSpec(
        "resource_gathering", resource.build_resource_gathering, (376, 4, 1), Fraction(1, 5),
        lambda: {"x": Fraction(1, 5)},
        scheme="5x5 grid x carried item (none/gold/gem) x deliveries 0..4, plus a terminal state; "
               "one slip parameter x; enemy cells attack with probability 1/10"),
    "taxi": BenchmarkSpec(
        "taxi", taxi.build_taxi, (501, 6, 300), Fraction(1, 20), taxi.canonical_valuation,
        scheme="classic 500-state taxi plus a transient start hub; three slip parameters "
               "(left, right, stay) per cell and direction, shared across passenger configurations"),
    "pacman": BenchmarkSpec(
        "pacman", pacman.build_pacman, (498, 5, 0), Fraction(1, 20), dict,
        scheme="31 Pac-Man cells x 16 ghost ring positions, plus caught and won; "
               "ghost moves with fixed probabilities 1/2, 1/3, 1/6"),
    "rps": BenchmarkSpec(
        "rps", rps.build_rps, (1321, 3, 9), Fraction(1, 20), rps.canonical_valuation, horizon=20,
        scheme="20 rounds; state = (round, score, previous play); opponent table o_<prev>_<play> "
               "biased by +1/5 towards the play that beats the previous play"),
}


def get_spec(name: str) -> BenchmarkSpec:
    try:
        return SPECS[name]
    except KeyError:
        raise KeyError(f"unknown benchmark {name!r}; choose from {sorted(SPECS)}") from None


def build(name: str, gamma=None) -> PMdp:
    return get_spec(name).build(gamma)


def dims(m: PMdp) -> tuple:
    return m.n_states, m.n_actions, len(m.params)


def dims_report(spec: BenchmarkSpec, m: PMdp | None = None) -> str:
    m = spec.build() if m is None else m
    got = dims(m)
    status = "ok" if got == spec.expected_dims else "MISMATCH"
    val = spec.valuation()
    shown = ", ".join(f"{k}={v}" for k, v in list(val.items())[:6])
    more = f", ... ({len(val)} parameters)" if len(val) > 6 else ""
    return (f"benchmark {spec.name}\n"
            f"dims |S|={got[0]} |A|={got[1]} |X|={got[2]} "
            f"expected {spec.expected_dims} {status}\n"
            f"alpha {spec.alpha}\nhorizon {spec.horizon}\ngamma {m.gamma}\n"
            f"valuation {shown}{more}\nscheme {spec.scheme}\n")


def behavior_policy(m: Mdp, alpha, optimal: np.ndarray | None = None) -> np.ndarray:
    """Optimal policy with mass ``alpha`` moved uniformly onto the other enabled actions."""
    alpha = float(alpha)
    if not 0.0 <= alpha < 1.0:
        raise ValueError("alpha must lie in [0, 1)")
    if optimal is None:
        optimal, _ = policy_iteration(m)
    k = m.enabled.sum(axis=1)
    others = np.where(k > 1, alpha / np.maximum(k - 1, 1), 0.0)
    pi = np.where(m.enabled, others[:, None], 0.0)
    best = optimal.argmax(axis=1)
    rows = np.arange(m.n_states)
    pi[rows, best] = np.where(k > 1, 1.0 - alpha, 1.0)
    pi[~m.enabled.any(axis=1)] = 0.0
    return pi
