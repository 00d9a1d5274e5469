"""Bellman optimality systems over the reals, SMT-LIB 2 output, and solver queries.

The parametric Bellman equations are written as polynomial constraints over
parameter variables, one value variable per state and one Q variable per
enabled pair.  A pruning query adds a single extra constraint; the pair is
removable exactly when the combined system is unsatisfiable.  Solvers run as
external processes that read the script on standard input.
"""

from __future__ import annotations

import logging
import re
import shlex
import subprocess
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .game import PruneResult, _apply_removals, exact_aval, exact_game_values, strict_bound_states
from .pmdp import PMdp
from .polynomial import Polynomial, sum_polynomials

log = logging.getLogger(__name__)

DEFAULT_SOLVER = "z3 -in"
DEFAULT_TIMEOUT = 60.0


class SolverError(RuntimeError):
    pass


# terms --------------------------------------------------------------------

def smt_rational(q: Fraction) -> str:
    q = Fraction(q)
    num, den = abs(q.numerator), q.denominator
    body = f"{num}.0" if den == 1 else f"(/ {num}.0 {den}.0)"
    return f"(- {body})" if q < 0 else body


def _product(factors: list) -> str:
    if not factors:
        return "1.0"
    return factors[0] if len(factors) == 1 else "(* " + " ".join(factors) + ")"


def _sum(terms: list) -> str:
    if not terms:
        return "0.0"
    return terms[0] if len(terms) == 1 else "(+ " + " ".join(terms) + ")"


@dataclass(frozen=True)
class Term:
    """A polynomial over model parameters, value variables and Q variables.

    Represented as a list of ``(coefficient, [variable, ...])`` products.
    """

    products: tuple

    def smt(self) -> str:
        out = []
        for coef, names in self.products:
            factors = list(names)
            if coef != 1 or not factors:
                factors.insert(0, smt_rational(coef))
            out.append(_product(factors))
        return _sum(out)


def _poly_products(p: Polynomial, names: dict) -> list:
    out = []
    for mono, coef in p.terms.items():
        factors = []
        for var, exp in mono:
            factors.extend([names[var]] * exp)
        out.append((coef, factors))
    return out


@dataclass(frozen=True)
class Constraint:
    op: str  # one of = <= < >= > or
    lhs: object
    rhs: object = None

    def smt(self) -> str:
        if self.op == "or":
            return "(or " + " ".join(c.smt() for c in self.lhs) + ")"
        return f"({self.op} {self.lhs.smt()} {self.rhs.smt()})"


def _var(name: str) -> Term:
    return Term(((Fraction(1), [name]),))


def _const(q) -> Term:
    return Term(((Fraction(q), []),))


@dataclass
class EtrSystem:
    params: list
    v_vars: list
    q_vars: list
    constraints: list = field(default_factory=list)
    query: list = field(default_factory=list)
    comment: str = ""

    @property
    def variables(self) -> list:
        return self.params + self.v_vars + self.q_vars

    @property
    def n_constraints(self) -> int:
        return len(self.constraints) + len(self.query)

    def with_query(self, *constraints: Constraint, comment: str = "") -> "EtrSystem":
        return EtrSystem(self.params, self.v_vars, self.q_vars, self.constraints,
                         list(constraints), comment)


def param_var(i: int) -> str:
    return f"theta_{i}"


def v_var(s: int) -> str:
    return f"v_{s}"


def q_var(s: int, a: int) -> str:
    return f"q_{s}_{a}"


def encode_bellman(m: PMdp, value_bounds: bool = True) -> EtrSystem:
    """Parametric Bellman optimality system with graph-preserving parameter constraints.

    With ``value_bounds`` the system also states ``aVal(s) <= V_s <= cVal(s)``
    and the matching one-step bounds on every Q variable.  These hold for
    every graph-preserving valuation, so they never change satisfiability,
    but they shrink the search space of nonlinear solvers considerably.
    """
    pnames = {x: param_var(i) for i, x in enumerate(m.params)}
    keys = sorted(m.trans)
    sys = EtrSystem([pnames[x] for x in m.params], [v_var(s) for s in range(m.n_states)],
                    [q_var(*k) for k in keys])
    cons = sys.constraints
    # graph preservation: every label strictly positive and at most one, rows sum to one
    seen = set()
    for k in keys:
        for p in m.trans[k].values():
            if p.is_constant() or p in seen:
                continue
            seen.add(p)
            t = Term(tuple(_poly_products(p, pnames)))
            cons.append(Constraint(">", t, _const(0)))
            cons.append(Constraint("<=", t, _const(1)))
    seen_rows = set()
    for k in keys:
        total = sum_polynomials(m.trans[k].values())
        if total == Polynomial.const(1) or total in seen_rows:
            continue
        seen_rows.add(total)
        cons.append(Constraint("=", Term(tuple(_poly_products(total, pnames))), _const(1)))
    # Q equations
    for s, a in keys:
        g = Fraction(1) if s in m.transient else Fraction(m.gamma)
        prods = [(m.r(s, a), [])] if m.r(s, a) != 0 else []
        for t in sorted(m.trans[(s, a)]):
            for coef, factors in _poly_products(m.trans[(s, a)][t], pnames):
                prods.append((g * coef, factors + [v_var(t)]))
        cons.append(Constraint("=", _var(q_var(s, a)), Term(tuple(prods))))
    # V is the maximum of the Q values
    for s in range(m.n_states):
        acts = m.enabled(s)
        for a in acts:
            cons.append(Constraint(">=", _var(v_var(s)), _var(q_var(s, a))))
        eqs = [Constraint("=", _var(v_var(s)), _var(q_var(s, a))) for a in acts]
        cons.append(eqs[0] if len(eqs) == 1 else Constraint("or", eqs))
    if value_bounds:
        cons.extend(_value_bounds(m))
    return sys


def _value_bounds(m: PMdp) -> list:
    lo, hi = exact_game_values(m)
    out = []
    for s in range(m.n_states):
        out.append(Constraint(">=", _var(v_var(s)), _const(lo[s])))
        out.append(Constraint("<=", _var(v_var(s)), _const(hi[s])))
    for s, a in sorted(m.trans):
        g = Fraction(1) if s in m.transient else Fraction(m.gamma)
        succ = m.trans[(s, a)]
        out.append(Constraint(">=", _var(q_var(s, a)), _const(m.r(s, a) + g * min(lo[t] for t in succ))))
        out.append(Constraint("<=", _var(q_var(s, a)), _const(m.r(s, a) + g * max(hi[t] for t in succ))))
    return out


def emit_smtlib(sys: EtrSystem) -> str:
    lines = ["(set-logic QF_NRA)"]
    if sys.comment:
        lines.insert(0, f"; {sys.comment}")
    lines += [f"(declare-fun {v} () Real)" for v in sys.variables]
    lines += [f"(assert {c.smt()})" for c in sys.constraints]
    lines += [f"(assert {c.smt()})" for c in sys.query]
    lines += ["(check-sat)", "(get-model)", "(exit)"]
    return "\n".join(lines) + "\n"


def count_assertions(script: str) -> int:
    return sum(1 for line in script.splitlines() if line.startswith("(assert "))


# solver interaction ---------------------------------------------------------

@dataclass(frozen=True)
class SolverVerdict:
    status: str  # sat, unsat, unknown or timeout
    model: Optional[dict] = None
    wall_time: float = 0.0

    def __post_init__(self):
        if self.status not in ("sat", "unsat", "unknown", "timeout"):
            raise ValueError(f"bad status {self.status!r}")
        if self.model is not None and self.status != "sat":
            raise ValueError("a model is only available for sat")


_TOKEN = re.compile(r"\(|\)|[^\s()]+")


def _parse_sexprs(text: str) -> list:
    stack: list = [[]]
    for tok in _TOKEN.findall(text):
        if tok == "(":
            stack.append([])
        elif tok == ")":
            if len(stack) == 1:
                raise SolverError("unbalanced parenthesis in solver output")
            done = stack.pop()
            stack[-1].append(done)
        else:
            stack[-1].append(tok)
    if len(stack) != 1:
        raise SolverError("unbalanced parenthesis in solver output")
    return stack[0]


def _value(expr):
    """Rational value of a model term, or None for algebraic numbers."""
    if isinstance(expr, str):
        try:
            return Fraction(expr)
        except ValueError:
            return None
    if not expr:
        return None
    head, args = expr[0], [_value(e) for e in expr[1:]]
    if any(x is None for x in args):
        return None
    if head == "-" and len(args) == 1:
        return -args[0]
    if head == "-":
        return args[0] - sum(args[1:])
    if head == "/" and len(args) == 2 and args[1] != 0:
        return args[0] / args[1]
    if head == "+":
        return sum(args)
    if head == "*":
        out = Fraction(1)
        for x in args:
            out *= x
        return out
    return None


def parse_model(text: str) -> dict:
    out = {}
    for item in _parse_sexprs(text):
        entries = item[1:] if item and item[0] == "model" else item
        for e in entries:
            if isinstance(e, list) and len(e) == 5 and e[0] == "define-fun":
                out[e[1]] = _value(e[4])
    return out


def solve(script: str, solver_cmd: str = DEFAULT_SOLVER, timeout: float = DEFAULT_TIMEOUT) -> SolverVerdict:
    """Run one solver process on ``script``."""
    argv = shlex.split(solver_cmd)
    start = time.perf_counter()
    try:
        proc = subprocess.run(argv, input=script, capture_output=True, text=True, timeout=timeout)
    except subprocess.TimeoutExpired:
        return SolverVerdict("timeout", None, time.perf_counter() - start)
    except OSError as exc:
        raise SolverError(f"cannot launch solver {solver_cmd!r}: {exc}") from exc
    wall = time.perf_counter() - start
    lines = proc.stdout.strip().splitlines()
    status = lines[0].strip() if lines else ""
    if status not in ("sat", "unsat", "unknown"):
        err = (proc.stderr or proc.stdout).strip()[:200]
        raise SolverError(f"unexpected solver output (exit {proc.returncode}): {err!r}")
    model = parse_model("\n".join(lines[1:])) if status == "sat" else None
    return SolverVerdict(status, model, wall)


# pruning queries -------------------------------------------------------------

@dataclass(frozen=True)
class PruneQuery:
    s: int
    a: int
    kind: str  # aval-q or q-q
    system: EtrSystem
    nonstrict: bool = False

    @property
    def script(self) -> str:
        return emit_smtlib(self.system)


def aval_q_query(m: PMdp, s: int, a: int, base: EtrSystem | None = None, aval=None,
                 strict_states=None) -> PruneQuery:
    """Query whose unsatisfiability shows that ``(s, a)`` never beats aVal(s)."""
    base = encode_bellman(m) if base is None else base
    aval = exact_aval(m) if aval is None else aval
    strict_states = strict_bound_states(m) if strict_states is None else strict_states
    nonstrict = bool(strict_states[s])
    op = ">" if nonstrict else ">="
    q = Constraint(op, _var(q_var(s, a)), _const(aval[s]))
    comment = f"aval-q {m.states[s]} {m.actions[a]} {'nonstrict' if nonstrict else 'strict'}"
    return PruneQuery(s, a, "aval-q", base.with_query(q, comment=comment), nonstrict)


def qq_query(m: PMdp, s: int, a: int, base: EtrSystem | None = None) -> PruneQuery:
    """Query whose unsatisfiability shows V(s) > Q(s, a) for every valuation."""
    base = encode_bellman(m) if base is None else base
    q = Constraint("<=", _var(v_var(s)), _var(q_var(s, a)))
    return PruneQuery(s, a, "q-q", base.with_query(q, comment=f"q-q {m.states[s]} {m.actions[a]}"))


def export_query(m: PMdp, s: int, a: int, kind: str) -> str:
    if kind == "aval-q":
        return aval_q_query(m, s, a).script
    if kind == "q-q":
        return qq_query(m, s, a).script
    raise ValueError(f"unknown query kind {kind!r}")


def _check(m: PMdp, s: int, a: int) -> None:
    if (s, a) not in m.trans:
        raise ValueError(f"pair ({m.states[s]}, {m.actions[a]}) is not enabled")


def aval_q_prunable(m: PMdp, s: int, a: int, solver_cmd: str = DEFAULT_SOLVER,
                    timeout: float = DEFAULT_TIMEOUT) -> tuple:
    """``(prunable, verdict)``; only a definite unsat prunes."""
    _check(m, s, a)
    if len(m.enabled(s)) < 2:
        return False, None
    verdict = solve(aval_q_query(m, s, a).script, solver_cmd, timeout)
    return verdict.status == "unsat", verdict


def qq_prunable(m: PMdp, s: int, a: int, solver_cmd: str = DEFAULT_SOLVER,
                timeout: float = DEFAULT_TIMEOUT) -> tuple:
    _check(m, s, a)
    if len(m.enabled(s)) < 2:
        return False, None
    verdict = solve(qq_query(m, s, a).script, solver_cmd, timeout)
    return verdict.status == "unsat", verdict


def _witnessed(m: PMdp, kind: str, valuations, aval, strict_states=None) -> set:
    """Pairs whose query is satisfied at one of the given valuations.

    Such queries are satisfiable, so the pair cannot be pruned and the solver
    call can be skipped.  Non-strict aval-q queries ask for ``Q > aVal`` and
    need a witness with a clear margin; the other queries accept a small
    slack, which only ever keeps a pair.
    """
    from .pmdp import instantiate
    from .solve import value_iteration

    out = set()
    for v in valuations or ():
        vt = value_iteration(instantiate(m, v))
        for (s, a) in m.trans:
            q = vt.Q[s, a]
            bound = float(aval[s]) if kind == "aval-q" else vt.V[s]
            tol = 1e-9 * max(1.0, abs(bound))
            if kind == "aval-q" and strict_states is not None and strict_states[s]:
                hit = q > bound + tol
            else:
                hit = q >= bound - tol
            if hit:
                out.add((s, a))
    return out


def smt_prune(m: PMdp, kind: str = "q-q", solver_cmd: str = DEFAULT_SOLVER,
              timeout: float = DEFAULT_TIMEOUT, workers: int = 4, max_rounds: int = 100,
              witnesses=None) -> tuple:
    """Query every pair at states with a choice and remove the provably suboptimal ones.

    ``witnesses`` is an optional list of graph-preserving valuations; pairs
    that are optimal (for aval-q: at least aVal) at one of them are kept
    without a solver call.  Rounds repeat on the reduced model until no
    query comes back unsat.
    """
    result = PruneResult()
    for _ in range(max_rounds):
        base = encode_bellman(m)
        queries = []
        aval = exact_aval(m)
        strict = strict_bound_states(m) if kind == "aval-q" else None
        skip = _witnessed(m, kind, witnesses, aval, strict)
        for (s, a) in sorted(m.trans):
            if len(m.enabled(s)) < 2 or (s, a) in skip:
                continue
            if kind == "aval-q":
                queries.append(aval_q_query(m, s, a, base, aval, strict))
            elif kind == "q-q":
                queries.append(qq_query(m, s, a, base))
            else:
                raise ValueError(f"unknown query kind {kind!r}")
        with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
            verdicts = list(pool.map(lambda q: solve(q.script, solver_cmd, timeout), queries))
        cands = {}
        for q, v in zip(queries, verdicts):
            if v.status == "unsat":
                cands[(q.s, q.a)] = f"{kind}-{'nonstrict' if q.nonstrict else 'strict'}" \
                    if kind == "aval-q" else kind
            elif v.status != "sat":
                result.undecided.append((q.s, q.a, v.status))
                log.info("query %s on (%s, %s) gave %s", kind, m.states[q.s], m.actions[q.a], v.status)
        if not cands:
            break
        result.rounds += 1
        m = _apply_removals(m, cands, result)
    return m, result
