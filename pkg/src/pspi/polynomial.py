"""Exact multivariate polynomials over the rationals.

A polynomial maps monomials to ``Fraction`` coefficients.  A monomial is a
sorted tuple of ``(parameter_name, exponent)`` pairs; the empty tuple is the
constant monomial.  Zero coefficients are never stored, so two polynomials
are equal iff their term dictionaries are equal.  That makes label
comparison in parameter tying an exact, syntactic test.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Iterable, Mapping

Monomial = tuple  # tuple[tuple[str, int], ...]

_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_.]*")


class PolynomialError(ValueError):
    pass


def _mono_mul(m1: Monomial, m2: Monomial) -> Monomial:
    if not m1:
        return m2
    if not m2:
        return m1
    exps = dict(m1)
    for name, e in m2:
        exps[name] = exps.get(name, 0) + e
    return tuple(sorted(exps.items()))


def _mono_degree(m: Monomial) -> int:
    return sum(e for _, e in m)


def _mono_key(m: Monomial):
    # higher degree first, then lexicographic on (name, -exp)
    return (-_mono_degree(m), tuple((n, -e) for n, e in m))


class Polynomial:
    """Immutable, canonical polynomial with rational coefficients."""

    __slots__ = ("_terms", "_hash")

    def __init__(self, terms: Mapping[Monomial, Fraction] | None = None):
        clean = {}
        for mono, c in (terms or {}).items():
            c = Fraction(c)
            if c != 0:
                clean[tuple(sorted((n, int(e)) for n, e in mono if e != 0))] = c
        self._terms = dict(sorted(clean.items(), key=lambda kv: _mono_key(kv[0])))
        self._hash = None

    # construction -------------------------------------------------------
    @classmethod
    def const(cls, value) -> "Polynomial":
        return cls({(): Fraction(value)})

    @classmethod
    def var(cls, name: str) -> "Polynomial":
        return cls({((name, 1),): Fraction(1)})

    @classmethod
    def parse(cls, text: str) -> "Polynomial":
        return parse_polynomial(text)

    # inspection ---------------------------------------------------------
    @property
    def terms(self) -> dict:
        return dict(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def is_constant(self) -> bool:
        return all(not m for m in self._terms)

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise PolynomialError(f"{self} is not constant")
        return self._terms.get((), Fraction(0))

    @property
    def variables(self) -> frozenset:
        return frozenset(n for m in self._terms for n, _ in m)

    @property
    def degree(self) -> int:
        return max((_mono_degree(m) for m in self._terms), default=0)

    # arithmetic ---------------------------------------------------------
    def __add__(self, other):
        other = _coerce(other)
        out = dict(self._terms)
        for m, c in other._terms.items():
            out[m] = out.get(m, Fraction(0)) + c
        return Polynomial(out)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial({m: -c for m, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) - self

    def __mul__(self, other):
        other = _coerce(other)
        out: dict = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = _mono_mul(m1, m2)
                out[m] = out.get(m, Fraction(0)) + c1 * c2
        return Polynomial(out)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise PolynomialError("only non-negative integer powers are polynomial")
        result = Polynomial.const(1)
        base = self
        while k:
            if k & 1:
                result = result * base
            base = base * base
            k >>= 1
        return result

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = Polynomial.const(other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self._terms == other._terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(tuple(self._terms.items()))
        return self._hash

    # evaluation ---------------------------------------------------------
    def evaluate(self, valuation: Mapping[str, float]) -> float:
        total = 0.0
        for m, c in self._terms.items():
            term = float(c)
            for name, e in m:
                try:
                    term *= float(valuation[name]) ** e
                except KeyError:
                    raise PolynomialError(f"parameter {name!r} has no value") from None
            total += term
        return total

    def evaluate_exact(self, valuation: Mapping[str, Fraction]) -> Fraction:
        total = Fraction(0)
        for m, c in self._terms.items():
            term = c
            for name, e in m:
                if name not in valuation:
                    raise PolynomialError(f"parameter {name!r} has no value")
                term *= Fraction(valuation[name]) ** e
            total += term
        return total

    # text ---------------------------------------------------------------
    def __str__(self):
        if not self._terms:
            return "0"
        parts = []
        for i, (m, c) in enumerate(self._terms.items()):
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            factors = [n if e == 1 else f"{n}^{e}" for n, e in m]
            if mag != 1 or not factors:
                factors.insert(0, _fmt_fraction(mag))
            body = "*".join(factors)
            if i == 0:
                parts.append(("-" if sign == "-" else "") + body)
            else:
                parts.append(f" {sign} {body}")
        return "".join(parts)

    def __repr__(self):
        return f"Polynomial({str(self)!r})"


def _fmt_fraction(q: Fraction) -> str:
    return str(q.numerator) if q.denominator == 1 else f"{q.numerator}/{q.denominator}"


def _coerce(x) -> Polynomial:
    if isinstance(x, Polynomial):
        return x
    if isinstance(x, (int, Fraction)):
        return Polynomial.const(x)
    raise TypeError(f"cannot combine Polynomial with {type(x).__name__}")


def to_fraction(text: str) -> Fraction:
    """Parse ``3/4``, ``0.25``, ``-2`` or ``1e-3`` exactly."""
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as exc:
        raise PolynomialError(f"not a rational number: {text!r}") from exc


# parsing ----------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<num>\d+(?:\.\d*)?(?:[eE][-+]?\d+)?|\.\d+(?:[eE][-+]?\d+)?)"
    r"|(?P<ident>[A-Za-z_][A-Za-z0-9_.]*)|(?P<op>[-+*/^()]))"
)


def _tokenize(text: str) -> list:
    tokens, pos = [], 0
    text = text.rstrip()
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == pos:
            raise PolynomialError(f"unexpected character {text[pos]!r} in {text!r}")
        pos = m.end()
        if m.group("num") is not None:
            tokens.append(("num", m.group("num")))
        elif m.group("ident") is not None:
            tokens.append(("ident", m.group("ident")))
        else:
            tokens.append(("op", m.group("op")))
    return tokens


class _Parser:
    def __init__(self, text):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None)

    def take(self):
        tok = self.peek()
        self.i += 1
        return tok

    def expect(self, op):
        tok = self.take()
        if tok != ("op", op):
            raise PolynomialError(f"expected {op!r} in {self.text!r}")

    def parse(self) -> Polynomial:
        if not self.toks:
            raise PolynomialError("empty polynomial expression")
        p = self.expr()
        if self.i != len(self.toks):
            raise PolynomialError(f"trailing input in {self.text!r}")
        return p

    def expr(self):
        p = self.term()
        while self.peek() in (("op", "+"), ("op", "-")):
            op = self.take()[1]
            q = self.term()
            p = p + q if op == "+" else p - q
        return p

    def term(self):
        p = self.unary()
        while self.peek() in (("op", "*"), ("op", "/")):
            op = self.take()[1]
            q = self.unary()
            if op == "*":
                p = p * q
            else:
                if not q.is_constant():
                    raise PolynomialError(f"division by a non-constant in {self.text!r}")
                d = q.constant_value()
                if d == 0:
                    raise PolynomialError(f"division by zero in {self.text!r}")
                p = p * Polynomial.const(1 / d)
        return p

    def unary(self):
        if self.peek() == ("op", "-"):
            self.take()
            return -self.unary()
        if self.peek() == ("op", "+"):
            self.take()
            return self.unary()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek() == ("op", "^"):
            self.take()
            kind, val = self.take()
            if kind != "num" or not val.isdigit():
                raise PolynomialError(f"exponent must be a non-negative integer in {self.text!r}")
            base = base ** int(val)
        return base

    def atom(self):
        kind, val = self.take()
        if kind == "num":
            return Polynomial.const(to_fraction(val))
        if kind == "ident":
            return Polynomial.var(val)
        if (kind, val) == ("op", "("):
            p = self.expr()
            self.expect(")")
            return p
        raise PolynomialError(f"unexpected token {val!r} in {self.text!r}")


def parse_polynomial(text: str) -> Polynomial:
    """Parse and canonicalize a polynomial expression.

    Accepts rationals, identifiers, ``+ - * ^``, parentheses, and ``/`` by a
    non-zero constant.  Anything that is not a polynomial raises
    :class:`PolynomialError`.
    """
    return _Parser(text).parse()


def is_identifier(name: str) -> bool:
    return bool(_IDENT.fullmatch(name))


def sum_polynomials(polys: Iterable[Polynomial]) -> Polynomial:
    out: dict = {}
    for p in polys:
        for m, c in p._terms.items():
            out[m] = out.get(m, Fraction(0)) + c
    return Polynomial(out)
