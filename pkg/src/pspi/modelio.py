"""Line-oriented text formats for pMDPs and datasets.

Model format::

    pmdp <name>
    gamma <rational>
    rmax <rational>
    param <name>            # repeatable
    state <name>            # repeatable
    initial <name>
    action <name>           # repeatable
    reward <s> <a> <rational>
    trans <s> <a> <s'> <polynomial expression>
    transient <name>        # optional, written by normalize_distinct_labels

Dataset format::

    dataset <env-name> <seed>
    episode
    step <s> <a> <s'>
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .pmdp import ModelError, PMdp
from .polynomial import PolynomialError, _fmt_fraction, is_identifier, parse_polynomial, to_fraction


class FormatError(ValueError):
    def __init__(self, lineno: int, msg: str):
        super().__init__(f"line {lineno}: {msg}")
        self.lineno = lineno


def _strip(line: str) -> str:
    return line.split("#", 1)[0].strip()


def parse_pmdp(text: str) -> PMdp:
    name = None
    gamma = rmax = None
    params, states, actions, transient = [], [], [], []
    initial = None
    rewards, transitions = [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip(raw)
        if not line:
            continue
        head, _, rest = line.partition(" ")
        rest = rest.strip()
        args = rest.split()
        try:
            if head == "pmdp":
                if len(args) != 1:
                    raise FormatError(lineno, "expected `pmdp <name>`")
                name = args[0]
            elif head == "gamma":
                gamma = to_fraction(rest)
            elif head == "rmax":
                rmax = to_fraction(rest)
            elif head in ("param", "state", "action", "initial", "transient"):
                if len(args) != 1 or not is_identifier_like(args[0]):
                    raise FormatError(lineno, f"expected `{head} <name>`")
                if head == "param" and not is_identifier(args[0]):
                    raise FormatError(lineno, f"invalid parameter name {args[0]!r}")
                target = {"param": params, "state": states, "action": actions,
                          "transient": transient}.get(head)
                if head == "initial":
                    initial = (lineno, args[0])
                elif args[0] in target:
                    raise FormatError(lineno, f"duplicate {head} {args[0]!r}")
                else:
                    target.append(args[0])
            elif head == "reward":
                if len(args) != 3:
                    raise FormatError(lineno, "expected `reward <s> <a> <rational>`")
                rewards.append((lineno, args[0], args[1], to_fraction(args[2])))
            elif head == "trans":
                parts = rest.split(None, 3)
                if len(parts) != 4:
                    raise FormatError(lineno, "expected `trans <s> <a> <s'> <polynomial>`")
                transitions.append((lineno, parts[0], parts[1], parts[2], parse_polynomial(parts[3])))
            else:
                raise FormatError(lineno, f"unknown directive {head!r}")
        except PolynomialError as exc:
            raise FormatError(lineno, str(exc)) from None

    if name is None:
        raise FormatError(1, "missing `pmdp <name>` header")
    if gamma is None:
        raise FormatError(1, "missing gamma")
    if not 0 < gamma < 1:
        raise ModelError(f"gamma must lie in (0, 1), got {gamma}")
    if initial is None:
        raise FormatError(1, "missing initial state")
    sidx = {n: i for i, n in enumerate(states)}
    aidx = {n: i for i, n in enumerate(actions)}

    def st(lineno, n):
        if n not in sidx:
            raise ModelError(f"line {lineno}: unknown state {n!r}")
        return sidx[n]

    def ac(lineno, n):
        if n not in aidx:
            raise ModelError(f"line {lineno}: unknown action {n!r}")
        return aidx[n]

    trans: dict = {}
    for lineno, s, a, t, poly in transitions:
        key = (st(lineno, s), ac(lineno, a))
        row = trans.setdefault(key, {})
        tt = st(lineno, t)
        if tt in row:
            raise ModelError(f"line {lineno}: duplicate transition {s} {a} {t}")
        if poly.is_zero():
            continue
        unknown = poly.variables - set(params)
        if unknown:
            raise ModelError(f"line {lineno}: undeclared parameters {sorted(unknown)}")
        row[tt] = poly
    reward = {}
    for lineno, s, a, r in rewards:
        key = (st(lineno, s), ac(lineno, a))
        if rmax is not None and abs(r) > rmax:
            raise ModelError(f"line {lineno}: reward {r} exceeds rmax {rmax}")
        reward[key] = r
    if rmax is None:
        rmax = max((abs(r) for r in reward.values()), default=Fraction(0))
    return PMdp(name, tuple(states), tuple(actions), st(*initial), tuple(params),
                {k: v for k, v in trans.items() if v}, reward, gamma, rmax,
                frozenset(st(0, n) for n in transient))


def is_identifier_like(name: str) -> bool:
    return bool(name) and not any(c.isspace() or c == "#" for c in name)


def serialize_pmdp(m: PMdp) -> str:
    out = [f"pmdp {m.name}", f"gamma {_fmt_fraction(m.gamma)}", f"rmax {_fmt_fraction(m.rmax)}"]
    out += [f"param {x}" for x in m.params]
    out += [f"state {s}" for s in m.states]
    out.append(f"initial {m.states[m.initial]}")
    out += [f"action {a}" for a in m.actions]
    out += [f"transient {m.states[s]}" for s in sorted(m.transient)]
    for (s, a) in sorted(m.reward):
        r = m.reward[(s, a)]
        if r != 0:
            out.append(f"reward {m.states[s]} {m.actions[a]} {_fmt_fraction(r)}")
    for (s, a) in sorted(m.trans):
        for t, poly in sorted(m.trans[(s, a)].items()):
            out.append(f"trans {m.states[s]} {m.actions[a]} {m.states[t]} {poly}")
    return "\n".join(out) + "\n"


def load_pmdp(path) -> PMdp:
    with open(path, encoding="utf-8") as fh:
        return parse_pmdp(fh.read())


def save_pmdp(m: PMdp, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(serialize_pmdp(m))


# policies ------------------------------------------------------------------

def serialize_policy(pi, states, actions) -> str:
    """One ``<state> <action> <probability>`` line per nonzero entry."""
    out = ["policy"]
    for s, a in zip(*np.nonzero(pi)):
        out.append(f"{states[s]} {actions[a]} {float(pi[s, a])!r}")
    return "\n".join(out) + "\n"


def parse_policy(text: str, states, actions, tol: float = 1e-9):
    sidx = {n: i for i, n in enumerate(states)}
    aidx = {n: i for i, n in enumerate(actions)}
    pi = np.zeros((len(states), len(actions)))
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip(raw)
        if not line or line == "policy":
            continue
        parts = line.split()
        if len(parts) != 3:
            raise FormatError(lineno, "expected `<state> <action> <probability>`")
        try:
            s, a = sidx[parts[0]], aidx[parts[1]]
        except KeyError as exc:
            raise FormatError(lineno, f"unknown name {exc.args[0]!r}") from None
        try:
            pi[s, a] = float(to_fraction(parts[2]))
        except (ValueError, PolynomialError):
            raise FormatError(lineno, f"bad probability {parts[2]!r}") from None
    sums = pi.sum(axis=1)
    bad = np.flatnonzero(np.abs(sums - 1.0) > tol)
    if len(bad):
        raise FormatError(0, f"policy row for state {states[bad[0]]} sums to {sums[bad[0]]}")
    return pi
