"""Textual polynomial syntax for setup files.

Grammar: rational coefficients (`3`, `-1/2`), variables `x1`, `q2`, powers
with `^`, products with `*` (or juxtaposition by whitespace is NOT allowed),
sums with `+`/`-`, parentheses.  `/` only joins two integer literals.
"""

from __future__ import annotations

import re
from fractions import Fraction
from typing import Dict, List, Sequence, Tuple

TOKEN = re.compile(r"\s*(?:(?P<num>\d+)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
                   r"|(?P<op>[-+*^()/]))")


class PolyParseError(ValueError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


def _tokenize(text: str) -> List[Tuple[str, object, int]]:
    out = []
    pos = 0
    while pos < len(text):
        m = TOKEN.match(text, pos)
        if not m or m.end() == pos:
            if text[pos:].strip():
                raise PolyParseError(f"unexpected character {text[pos]!r}", pos)
            break
        if m.group("num"):
            out.append(("num", int(m.group("num")), m.start()))
        elif m.group("name"):
            out.append(("name", m.group("name"), m.start()))
        else:
            out.append(("op", m.group("op"), m.start()))
        pos = m.end()
    return out


Poly = Dict[Tuple[int, ...], Fraction]


class _Parser:
    def __init__(self, tokens, names: Sequence[str]):
        self.toks = tokens
        self.i = 0
        self.names = {n: i for i, n in enumerate(names)}
        self.nvars = len(names)

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else (None, None, -1)

    def next(self):
        t = self.peek()
        self.i += 1
        return t

    def expect_op(self, op):
        kind, val, pos = self.next()
        if kind != "op" or val != op:
            raise PolyParseError(f"expected {op!r}", pos)

    # expr := term (('+'|'-') term)*
    def expr(self) -> Poly:
        sign = 1
        kind, val, _ = self.peek()
        if kind == "op" and val in "+-":
            self.next()
            sign = -1 if val == "-" else 1
        acc = _scale(self.term(), Fraction(sign))
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val in "+-":
                self.next()
                t = self.term()
                acc = _add(acc, _scale(t, Fraction(-1 if val == "-" else 1)))
            else:
                return acc

    # term := factor ('*' factor)*
    def term(self) -> Poly:
        acc = self.factor()
        while True:
            kind, val, _ = self.peek()
            if kind == "op" and val == "*":
                self.next()
                acc = _mul(acc, self.factor(), self.nvars)
            else:
                return acc

    # factor := atom ('^' num)?
    def factor(self) -> Poly:
        a = self.atom()
        kind, val, pos = self.peek()
        if kind == "op" and val == "^":
            self.next()
            kind, e, pos = self.next()
            if kind != "num":
                raise PolyParseError("exponent must be an integer", pos)
            out = {(0,) * self.nvars: Fraction(1)}
            for _ in range(e):
                out = _mul(out, a, self.nvars)
            return out
        return a

    # atom := num ('/' num)? | name | '(' expr ')'
    def atom(self) -> Poly:
        kind, val, pos = self.next()
        if kind == "num":
            k2, v2, _ = self.peek()
            if k2 == "op" and v2 == "/":
                self.next()
                k3, v3, p3 = self.next()
                if k3 != "num":
                    raise PolyParseError("denominator must be an integer", p3)
                return {(0,) * self.nvars: Fraction(val, v3)}
            return {(0,) * self.nvars: Fraction(val)}
        if kind == "name":
            if val == "nu":
                raise PolyParseError("nu is not allowed in setup polynomials",
                                     pos)
            if val not in self.names:
                raise PolyParseError(f"unknown variable {val!r}", pos)
            k = tuple(1 if i == self.names[val] else 0
                      for i in range(self.nvars))
            return {k: Fraction(1)}
        if kind == "op" and val == "(":
            e = self.expr()
            self.expect_op(")")
            return e
        raise PolyParseError(f"unexpected token {val!r}", pos)


def _add(a: Poly, b: Poly) -> Poly:
    out = dict(a)
    for k, v in b.items():
        w = out.get(k, Fraction(0)) + v
        if w:
            out[k] = w
        else:
            out.pop(k, None)
    return out


def _scale(a: Poly, c: Fraction) -> Poly:
    return {k: v * c for k, v in a.items()} if c else {}


def _mul(a: Poly, b: Poly, nvars: int) -> Poly:
    out: Poly = {}
    for k1, v1 in a.items():
        for k2, v2 in b.items():
            k = tuple(x + y for x, y in zip(k1, k2))
            w = out.get(k, Fraction(0)) + v1 * v2
            if w:
                out[k] = w
            else:
                out.pop(k, None)
    return out


def parse_polynomial(text: str, names: Sequence[str]) -> Poly:
    """Parse into a sparse exponent dict over the given variable names."""
    p = _Parser(_tokenize(text), names)
    if not p.toks:
        raise PolyParseError("empty polynomial", 0)
    out = p.expr()
    if p.i != len(p.toks):
        raise PolyParseError("trailing input", p.toks[p.i][2])
    return out
