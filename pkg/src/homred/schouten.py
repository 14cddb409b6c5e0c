"""Polyvector fields with the Schouten-Nijenhuis bracket.

A polyvector is an element of the free graded-commutative algebra generated
by the odd symbols e1..em (the shifted coordinate vector fields) over the
polynomial base; the bracket is evaluated monomial-by-monomial through the
explicit double-sum formula, moving each vector factor out with its Koszul
sign and taking the Lie bracket of the atomic pieces.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .algebra import (GHOST, Generator, GradedElement, GeneratorTable, mul)


def polyvector_table(base_dim: int, base_names: Sequence[str] = ()
                     ) -> GeneratorTable:
    """Table whose odd degree-one generators are the coordinate vector symbols."""
    gens = tuple(Generator(f"e{i+1}", 1, GHOST, i) for i in range(base_dim))
    return GeneratorTable(base_dim, gens, tuple(base_names))


def arity(x: GradedElement) -> int:
    """Vector-generator count; raises if monomials mix arities."""
    ar = {sum(m[1]) for m in x.terms}
    if not ar:
        return 0
    if len(ar) > 1:
        raise ValueError(f"mixed arities {sorted(ar)}")
    return ar.pop()


def vector_field(table: GeneratorTable, coeffs: Dict[int, GradedElement]
                 ) -> GradedElement:
    """Sum coeffs[i] * e_{i+1} for base-polynomial coefficients."""
    out = table.zero()
    for i, c in coeffs.items():
        out = out + mul(c, table.var(f"e{i+1}"))
    return out


def _atomic_bracket(table: GeneratorTable, f: GradedElement, i: Optional[int],
                    g: GradedElement, j: Optional[int]) -> GradedElement:
    """Lie bracket of f*d_i and g*d_j (None index means a plain function)."""
    names = table.base_names
    if i is None and j is None:
        return table.zero()
    if i is not None and j is None:
        return mul(f, g.d(names[i]))
    if i is None and j is not None:
        return mul(g, f.d(names[j])).scale(-1)
    lhs = mul(mul(f, g.d(names[i])), table.var(f"e{j+1}"))
    rhs = mul(mul(g, f.d(names[j])), table.var(f"e{i+1}"))
    return lhs - rhs


def _mono_factors(table: GeneratorTable, mono) -> Tuple[GradedElement, List[int]]:
    """(coefficient polynomial, ordered vector indices) of a monomial."""
    b, g, nu = mono
    coeff = GradedElement(table, {(b, (0,) * table.ngen, nu): Fraction(1)})
    idx = [i for i, e in enumerate(g) for _ in range(e)]
    return coeff, idx


def _bracket_monomials(table: GeneratorTable, mX, cX, mY, cY) -> GradedElement:
    # the coefficient rides on the first vector factor; the even coefficient
    # polynomials cross the other factors without signs, so the choice is free
    fX, vX = _mono_factors(table, mX)
    fY, vY = _mono_factors(table, mY)
    r, s = len(vX), len(vY)
    scale = cX * cY
    out = table.zero()
    if r == 0 and s == 0:
        return out
    if s == 0:
        for ipos in range(r):
            sign = -1 if (r - 1 - ipos) & 1 else 1
            fi = fX if ipos == 0 else table.one()
            core = _atomic_bracket(table, fi, vX[ipos], fY, None)
            if core.is_zero():
                continue
            word = _word(table, vX, skip=ipos, coeff=None if ipos == 0 else fX)
            out = out + mul(word, core).scale(scale * sign)
        return out
    if r == 0:
        inner = _bracket_monomials(table, mY, cY, mX, cX)
        return inner.scale(-1 if s & 1 else 1)
    for ipos in range(r):
        for jpos in range(s):
            sign = -1 if ((r - 1 - ipos) + jpos) & 1 else 1
            fi = fX if ipos == 0 else table.one()
            fj = fY if jpos == 0 else table.one()
            core = _atomic_bracket(table, fi, vX[ipos], fj, vY[jpos])
            if core.is_zero():
                continue
            left = _word(table, vX, skip=ipos, coeff=None if ipos == 0 else fX)
            right = _word(table, vY, skip=jpos, coeff=None if jpos == 0 else fY)
            out = out + mul(mul(left, core), right).scale(scale * sign)
    return out


def _word(table: GeneratorTable, idx: Sequence[int], skip: int,
          coeff: Optional[GradedElement] = None) -> GradedElement:
    out = coeff if coeff is not None else table.one()
    for p, i in enumerate(idx):
        if p == skip:
            continue
        out = mul(out, table.var(f"e{i+1}"))
    return out


def schouten_bracket(x: GradedElement, y: GradedElement) -> GradedElement:
    """[x, y] per the monomial double-sum formula.

    Extends [X, a] = X(a) and the Lie bracket of vector fields; arity of the
    result is arity(x) + arity(y) - 1 on homogeneous inputs.
    """
    x._check(y)
    t = x.table
    out = t.zero()
    for mX, cX in x.terms.items():
        for mY, cY in y.terms.items():
            out = out + _bracket_monomials(t, mX, cX, mY, cY)
    return out


@dataclass
class PoissonVerdict:
    ok: bool
    residual: GradedElement

    def __bool__(self) -> bool:
        return self.ok


def check_poisson_tensor(pi: GradedElement) -> PoissonVerdict:
    """[Pi, Pi] = 0 for a bivector; the residual trivector otherwise."""
    if arity(pi) != 2:
        raise ValueError("a Poisson tensor must have arity 2")
    r = schouten_bracket(pi, pi)
    return PoissonVerdict(r.is_zero(), r)


def derived_bracket(f: GradedElement, g: GradedElement,
                    pi: GradedElement) -> GradedElement:
    """{f, g} := -[[Pi, f], g] for base polynomials and a Poisson tensor."""
    if arity(f) != 0 or arity(g) != 0:
        raise ValueError("derived_bracket expects base polynomials")
    if not check_poisson_tensor(pi):
        raise ValueError("not a Poisson tensor: [Pi, Pi] != 0")
    return schouten_bracket(schouten_bracket(pi, f), g).scale(-1)


def lichnerowicz(pi: GradedElement):
    """delta_Pi = [Pi, .]; squares to zero whenever [Pi, Pi] = 0."""
    return lambda x: schouten_bracket(pi, x)


def poisson_tensor_from_matrix(table: GeneratorTable, entries) -> GradedElement:
    """Pi = (1/2) sum entries[i][j] e_i e_j from an antisymmetric matrix."""
    out = table.zero()
    m = table.base_dim
    for i in range(m):
        for j in range(m):
            e = entries[i][j]
            if isinstance(e, GradedElement):
                c = e
            else:
                c = table.scalar(e)
            if c.is_zero():
                continue
            out = out + mul(mul(c, table.var(f"e{i+1}")),
                            table.var(f"e{j+1}")).scale(Fraction(1, 2))
    return out
