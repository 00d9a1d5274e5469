"""Dataset generation, the data-efficiency experiment loop, and CSV output.

Every seed draws one long dataset from the behaviour policy; the datasets for
the configured sizes are its prefixes.  Pruning runs once per environment,
before any data is seen.  Each (method, pruning, size) combination yields
the true-model value of the improved policy at the initial state.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import shlex
from bisect import bisect_right
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import accumulate

import numpy as np

from .bench import behavior_policy, get_spec
from .bounds import zeta_bound
from .game import aval_cval_prune
from .parametric import label_classes, pooled_counts
from .pmdp import Mdp, PMdp, instantiate
from .solve import policy_evaluation, policy_iteration
from .spibb import Dataset, count, mle_mdp, spibb_policy, uncertainty_set

log = logging.getLogger(__name__)

METHODS = ("spibb", "pspibb")
PRUNINGS = ("none", "game", "smt")
CSV_HEADER = ("env", "method", "pruning", "n_wedge", "size", "mean", "cvar10", "cvar1", "baseline")
RAW_HEADER = ("env", "method", "pruning", "n_wedge", "size", "seed", "performance", "baseline",
              "zeta", "n_uncertain", "status")


# sampling --------------------------------------------------------------------

class Sampler:
    """Fast episodic simulator for a concrete MDP and a fixed policy."""

    def __init__(self, m: Mdp, pi: np.ndarray, horizon: int = 200):
        self.m, self.horizon = m, horizon
        self.terminal = m.absorbing()
        self.act = []
        for s in range(m.n_states):
            acts = np.flatnonzero(pi[s] > 0)
            self.act.append((acts.tolist(), _cumulative(pi[s, acts])))
        self.succ = {}
        for s, a in zip(*np.nonzero(m.enabled)):
            nxt = np.flatnonzero(m.P[s, a] > 0)
            self.succ[(int(s), int(a))] = (nxt.tolist(), _cumulative(m.P[s, a, nxt]))

    def run(self, n_steps: int, rng: np.random.Generator) -> tuple:
        triples = np.empty((n_steps, 3), dtype=np.int64)
        episodes = [0] if n_steps else []
        u = rng.random((n_steps, 2)).tolist()
        s, t = self.m.initial, 0
        act, succ, horizon, terminal = self.act, self.succ, self.horizon, self.terminal
        for i in range(n_steps):
            acts, cum = act[s]
            a = acts[min(bisect_right(cum, u[i][0]), len(acts) - 1)]
            nxt, cum = succ[(s, a)]
            s2 = nxt[min(bisect_right(cum, u[i][1]), len(nxt) - 1)]
            triples[i] = (s, a, s2)
            t += 1
            if terminal[s2] or t >= horizon:
                s, t = self.m.initial, 0
                if i + 1 < n_steps:
                    episodes.append(i + 1)
            else:
                s = s2
        return triples, tuple(episodes) or (0,)


def _cumulative(p) -> list:
    c = list(accumulate(float(x) for x in p))
    return [x / c[-1] for x in c]


def sample_dataset(m: Mdp, pi: np.ndarray, n_steps: int, seed, horizon: int = 200,
                   env: str = "") -> Dataset:
    """Episodic rollouts from the initial state, truncated to exactly ``n_steps`` triples.

    ``seed`` may be an int, a ``SeedSequence`` or a ``Generator``.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    triples, episodes = Sampler(m, pi, horizon).run(n_steps, rng)
    tag = seed if isinstance(seed, int) else 0
    return Dataset(triples, episodes, env, tag)


def evaluate_policy_true(m_true: Mdp, pi: np.ndarray) -> float:
    return policy_evaluation(m_true, pi).value(m_true.initial)


def cvar(values, fraction: float) -> float:
    """Mean of the worst ``ceil(fraction * n)`` values."""
    vals = sorted(float(v) for v in values)
    if not vals:
        raise ValueError("cvar of an empty list")
    if not 0.0 < fraction <= 1.0:
        raise ValueError("fraction must lie in (0, 1]")
    k = max(1, math.ceil(fraction * len(vals) - 1e-12))
    return math.fsum(vals[:k]) / k


# configuration ---------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    env: str
    methods: tuple = (("spibb", "none"), ("pspibb", "none"))
    n_wedge: int = 200
    delta: float = 0.05
    sizes: tuple = (10, 100, 1000, 10000)
    n_seeds: int = 64
    alpha: float | None = None
    gamma: float | None = None
    seed: int = 0
    workers: int = 1
    solver_cmd: str = "z3 -in"
    solver_timeout: float = 60.0
    one_shot: bool = False

    def __post_init__(self):
        get_spec(self.env)
        if self.n_seeds < 1:
            raise ValueError("n_seeds must be at least 1")
        if any(b <= a for a, b in zip(self.sizes, self.sizes[1:])) or not self.sizes:
            raise ValueError("dataset sizes must be strictly increasing")
        if min(self.sizes) < 0:
            raise ValueError("dataset sizes must be non-negative")
        for meth, pr in self.methods:
            if meth not in METHODS or pr not in PRUNINGS:
                raise ValueError(f"unknown method {meth}:{pr}")


def parse_config(text: str) -> ExperimentConfig:
    """``key value...`` lines; methods are written as ``method:pruning`` tokens."""
    kw: dict = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, *vals = shlex.split(line)
        if not vals:
            raise ValueError(f"line {lineno}: missing value for {key!r}")
        if key == "env":
            kw["env"] = vals[0]
        elif key == "methods":
            kw["methods"] = tuple(tuple(v.split(":", 1)) if ":" in v else (v, "none") for v in vals)
        elif key in ("n_wedge", "n_seeds", "seed", "workers"):
            kw[key] = int(vals[0])
        elif key in ("delta", "alpha", "gamma", "solver_timeout"):
            kw[key] = float(vals[0])
        elif key == "sizes":
            kw["sizes"] = tuple(int(float(v)) for v in vals)
        elif key == "solver_cmd":
            kw["solver_cmd"] = " ".join(vals)
        elif key == "one_shot":
            kw["one_shot"] = vals[0].lower() in ("1", "true", "yes")
        else:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
    if "env" not in kw:
        raise ValueError("config needs an `env` line")
    return ExperimentConfig(**kw)


# experiment ------------------------------------------------------------------

@dataclass
class SeedResult:
    seed: int
    baseline: float
    performance: dict = field(default_factory=dict)  # (method, pruning, size) -> value
    zeta: dict = field(default_factory=dict)
    n_uncertain: dict = field(default_factory=dict)
    error: str = ""


@dataclass(frozen=True)
class CurvePoint:
    env: str
    method: str
    pruning: str
    n_wedge: int
    size: int
    mean: float
    cvar10: float
    cvar1: float
    baseline: float


@dataclass
class Environment:
    """Everything about an environment that does not depend on data."""

    model: PMdp
    true: Mdp
    skeleton: Mdp
    pi_b: np.ndarray
    baseline: float
    classes: object
    pruned: dict
    v_max: float
    horizon: int


@lru_cache(maxsize=8)
def prepare(cfg: ExperimentConfig) -> Environment:
    spec = get_spec(cfg.env)
    m = spec.build(cfg.gamma)
    true = spec.true_mdp(m)
    alpha = spec.alpha if cfg.alpha is None else cfg.alpha
    pi_b = behavior_policy(true, alpha)
    baseline = evaluate_policy_true(true, pi_b)
    pruned = {"none": None}
    prunings = {pr for _, pr in cfg.methods}
    if "game" in prunings:
        pruned["game"] = _mask(m, aval_cval_prune(m)[1].pairs)
    if "smt" in prunings:
        from .smt import smt_prune

        res = smt_prune(m, "q-q", cfg.solver_cmd, cfg.solver_timeout, workers=cfg.workers)[1]
        pruned["smt"] = _mask(m, res.pairs)
    v_max = float(m.rmax) / (1.0 - float(m.gamma))
    classes = label_classes(m) if any(meth == "pspibb" for meth, _ in cfg.methods) else None
    return Environment(m, true, true, pi_b, baseline, classes, pruned, v_max, spec.horizon)


def _mask(m: PMdp, pairs) -> np.ndarray:
    out = np.zeros((m.n_states, m.n_actions), dtype=bool)
    for s, a in pairs:
        out[s, a] = True
    return out


def seed_sequences(master: int, n: int) -> list:
    """Per-seed streams: child ``i`` of ``SeedSequence(master)``."""
    return np.random.SeedSequence(master).spawn(n)


def improved_policy(env: Environment, meth: str, pruning: str, data: Dataset, n_wedge: int,
                    one_shot: bool = False) -> tuple:
    """``(pi_I, mle, uncertainty set)`` for one method on one dataset."""
    c = count(data, env.true.n_states, env.true.n_actions)
    if meth == "pspibb":
        c = pooled_counts(c, env.classes)
    pruned = env.pruned[pruning]
    mle = mle_mdp(c, env.skeleton, None if pruned is None else ~pruned)
    u = uncertainty_set(c, n_wedge, env.skeleton)
    return spibb_policy(mle, env.pi_b, u, pruned=pruned, one_shot=one_shot), mle, u


def run_seed(cfg: ExperimentConfig, index: int) -> SeedResult:
    env = prepare(cfg)
    res = SeedResult(index, env.baseline)
    try:
        rng = np.random.default_rng(seed_sequences(cfg.seed, cfg.n_seeds)[index])
        triples, episodes = Sampler(env.true, env.pi_b, env.horizon).run(max(cfg.sizes), rng)
        full = Dataset(triples, episodes, cfg.env, index)
        S, A = env.true.n_states, env.true.n_actions
        for size in cfg.sizes:
            data = full.prefix(size)
            for meth, pr in cfg.methods:
                pi, mle, u = improved_policy(env, meth, pr, data, cfg.n_wedge, cfg.one_shot)
                key = (meth, pr, size)
                res.performance[key] = evaluate_policy_true(env.true, pi)
                c_term = (policy_evaluation(mle, env.pi_b).value(mle.initial)
                          - policy_evaluation(mle, pi).value(mle.initial))
                res.zeta[key] = zeta_bound(cfg.n_wedge, cfg.delta, env.v_max, float(env.true.gamma),
                                           c_term, S, A)
                res.n_uncertain[key] = len(u)
    except Exception as exc:  # recorded, reported in the summary
        log.exception("seed %d failed", index)
        res.error = f"{type(exc).__name__}: {exc}"
    return res


def run_experiment(cfg: ExperimentConfig) -> tuple:
    """``(curve points, seed results)``; failed seeds are excluded from the curves."""
    if cfg.workers > 1:
        prepare(cfg)
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            seeds = list(pool.map(run_seed, [cfg] * cfg.n_seeds, range(cfg.n_seeds)))
    else:
        seeds = [run_seed(cfg, i) for i in range(cfg.n_seeds)]
    seeds.sort(key=lambda r: r.seed)
    good = [r for r in seeds if not r.error]
    points = []
    for meth, pr in sorted(cfg.methods):
        for size in cfg.sizes:
            vals = [r.performance[(meth, pr, size)] for r in good]
            if not vals:
                continue
            points.append(CurvePoint(cfg.env, meth, pr, cfg.n_wedge, size, math.fsum(vals) / len(vals),
                                     cvar(vals, 0.1), cvar(vals, 0.01), good[0].baseline))
    return points, seeds


def _fmt(x: float) -> str:
    return repr(float(x))


def emit_csv(points, out=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for p in sorted(points, key=lambda p: (p.method, p.pruning, p.size)):
        w.writerow([p.env, p.method, p.pruning, p.n_wedge, p.size, _fmt(p.mean), _fmt(p.cvar10),
                    _fmt(p.cvar1), _fmt(p.baseline)])
    text = buf.getvalue()
    if out is not None:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text


def parse_csv(text: str) -> list:
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise ValueError("unexpected CSV header")
    return [CurvePoint(r[0], r[1], r[2], int(r[3]), int(r[4]), float(r[5]), float(r[6]),
                       float(r[7]), float(r[8])) for r in rows[1:]]


def emit_raw_csv(cfg: ExperimentConfig, seeds, out=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(RAW_HEADER)
    for r in sorted(seeds, key=lambda r: r.seed):
        if r.error:
            w.writerow([cfg.env, "", "", cfg.n_wedge, "", r.seed, "", _fmt(r.baseline), "", "",
                        f"error {r.error}"])
            continue
        for meth, pr in sorted(cfg.methods):
            for size in cfg.sizes:
                key = (meth, pr, size)
                w.writerow([cfg.env, meth, pr, cfg.n_wedge, size, r.seed, _fmt(r.performance[key]),
                            _fmt(r.baseline), _fmt(r.zeta[key]), r.n_uncertain[key], "ok"])
    text = buf.getvalue()
    if out is not None:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    return text
