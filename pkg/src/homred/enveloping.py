"""PBW straightening in U(h)_nu and the BCH star product on S(h).

Elements of the enveloping algebra of the rescaled Lie algebra (bracket
nu*[,]) are stored in the PBW basis of nondecreasing words; each commutator
insertion performed while straightening carries one power of nu.  The star
product is symmetrize, multiply, straighten, unsymmetrize.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import factorial
from typing import Dict, List, Optional, Sequence, Tuple

from .algebra import GradedElement, TruncationPolicy

Word = Tuple[int, ...]
UEA = Dict[Tuple[Word, int], Fraction]  # (PBW word, nu power) -> coefficient


class LieData:
    """Structure constants f[a][b][c] with [e_a, e_b] = sum_c f_ab^c e_c."""

    def __init__(self, f: Sequence[Sequence[Sequence[Fraction]]]):
        n = len(f)
        self.n = n
        self.f = tuple(tuple(tuple(Fraction(x) for x in row) for row in plane)
                       for plane in f)
        for a in range(n):
            for b in range(n):
                for c in range(n):
                    if self.f[a][b][c] != -self.f[b][a][c]:
                        raise ValueError("structure constants not antisymmetric")
        for a in range(n):
            for b in range(n):
                for c in range(n):
                    for e in range(n):
                        s = sum(self.f[a][b][d] * self.f[d][c][e]
                                + self.f[b][c][d] * self.f[d][a][e]
                                + self.f[c][a][d] * self.f[d][b][e]
                                for d in range(n))
                        if s != 0:
                            raise ValueError("structure constants fail Jacobi")

    def bracket_coeffs(self, a: int, b: int) -> List[Tuple[int, Fraction]]:
        return [(c, v) for c, v in enumerate(self.f[a][b]) if v]

    def trace_form(self) -> List[Fraction]:
        """chi_a = sum_b f_ab^b (the unimodularity obstruction)."""
        return [sum(self.f[a][b][b] for b in range(self.n)) for a in range(self.n)]


def _add(d: UEA, key, v: Fraction):
    w = d.get(key, Fraction(0)) + v
    if w:
        d[key] = w
    else:
        d.pop(key, None)


def straighten(word: Word, lie: LieData, nu_cap: Optional[int] = None) -> UEA:
    """PBW normal form of a product word; memoized per LieData."""
    cache = getattr(lie, "_straight_cache", None)
    if cache is None:
        cache = {}
        lie._straight_cache = cache
    if word in cache:
        base = cache[word]
    else:
        base = _straighten_raw(word, lie, cache)
    if nu_cap is None:
        return dict(base)
    return {k: v for k, v in base.items() if k[1] <= nu_cap}


def _straighten_raw(word: Word, lie: LieData, cache) -> UEA:
    for i in range(len(word) - 1):
        if word[i] > word[i + 1]:
            out: UEA = {}
            swapped = word[:i] + (word[i + 1], word[i]) + word[i + 2:]
            for k, v in _cached(swapped, lie, cache).items():
                _add(out, k, v)
            for c, coeff in lie.bracket_coeffs(word[i], word[i + 1]):
                shorter = word[:i] + (c,) + word[i + 2:]
                for (w, r), v in _cached(shorter, lie, cache).items():
                    _add(out, (w, r + 1), v * coeff)
            cache[word] = out
            return out
    cache[word] = {(word, 0): Fraction(1)}
    return cache[word]


def _cached(word: Word, lie: LieData, cache) -> UEA:
    if word not in cache:
        _straighten_raw(word, lie, cache)
    return cache[word]


def mul_uea(u: UEA, v: UEA, lie: LieData, nu_cap: Optional[int] = None) -> UEA:
    out: UEA = {}
    for (w1, r1), c1 in u.items():
        for (w2, r2), c2 in v.items():
            if nu_cap is not None and r1 + r2 > nu_cap:
                continue
            for (w, r), c in straighten(w1 + w2, lie, nu_cap).items():
                if nu_cap is not None and r1 + r2 + r > nu_cap:
                    continue
                _add(out, (w, r1 + r2 + r), c1 * c2 * c)
    return out


def _multiset_permutations(word: Word):
    """Distinct permutations of a multiset word, lexicographically."""
    word = tuple(sorted(word))
    yield word
    w = list(word)
    n = len(w)
    while True:
        i = n - 2
        while i >= 0 and w[i] >= w[i + 1]:
            i -= 1
        if i < 0:
            return
        j = n - 1
        while w[j] <= w[i]:
            j -= 1
        w[i], w[j] = w[j], w[i]
        w[i + 1:] = reversed(w[i + 1:])
        yield tuple(w)


def symmetrize(word: Word, lie: LieData, nu_cap: Optional[int] = None) -> UEA:
    """Image of the monomial prod(e_i for i in word) under symmetrization.

    Averages the k! orderings; distinct arrangements are weighted by their
    multiplicity, so the nu^0 part is exactly the sorted PBW word.
    """
    k = len(word)
    counts: Dict[int, int] = {}
    for a in word:
        counts[a] = counts.get(a, 0) + 1
    mult = Fraction(1)
    for c in counts.values():
        mult *= factorial(c)
    weight = mult / factorial(k)
    out: UEA = {}
    for arr in _multiset_permutations(word):
        for key, v in straighten(arr, lie, nu_cap).items():
            _add(out, key, v * weight)
    return out


def _elem_to_words(a: GradedElement) -> Dict[Tuple[Word, int], Fraction]:
    if not a.ghost_free():
        raise ValueError("BCH star product expects ghost-free polynomials")
    out: Dict[Tuple[Word, int], Fraction] = {}
    for (b, _g, nu), c in a.terms.items():
        word = tuple(i for i, e in enumerate(b) for _ in range(e))
        out[(word, nu)] = c
    return out


def _word_to_mono(table, word: Word, nu: int):
    b = [0] * table.base_dim
    for i in word:
        b[i] += 1
    return (tuple(b), (0,) * table.ngen, nu)


def sigma(a: GradedElement, lie: LieData,
          nu_cap: Optional[int] = None) -> UEA:
    out: UEA = {}
    for (word, nu), c in _elem_to_words(a).items():
        for (w, r), v in symmetrize(word, lie, nu_cap).items():
            if nu_cap is not None and nu + r > nu_cap:
                continue
            _add(out, (w, nu + r), v * c)
    return out


def sigma_inv(u: UEA, lie: LieData, table,
              nu_cap: Optional[int] = None) -> GradedElement:
    """Triangular inversion of the symmetrization map."""
    u = dict(u)
    terms: Dict[tuple, Fraction] = {}
    while u:
        lmax = max(len(w) for (w, _r) in u)
        batch = [((w, r), c) for (w, r), c in u.items() if len(w) == lmax]
        for (w, r), c in batch:
            mono = _word_to_mono(table, w, r)
            terms[mono] = terms.get(mono, Fraction(0)) + c
            for key, v in symmetrize(w, lie, nu_cap).items():
                ww, rr = key
                if nu_cap is not None and r + rr > nu_cap:
                    continue
                _add(u, (ww, r + rr), -v * c)
    return GradedElement(table, {m: c for m, c in terms.items() if c})


def bch_star(f: GradedElement, g: GradedElement, lie: LieData,
             policy: TruncationPolicy, return_notice: bool = False):
    """BCH (Gutt) star product on polynomials in the base coordinates.

    Symmetrize both factors into U(h)_nu, multiply, straighten to the PBW
    basis and pull back.  Exact up to the policy caps; if the degree cap
    drops terms, the notice flag says so.
    """
    N = policy.nu_order
    u = mul_uea(sigma(f, lie, N), sigma(g, lie, N), lie, N)
    result = sigma_inv(u, lie, f.table, N)
    truncated = False
    if policy.poly_degree is not None:
        kept = result.truncate(policy)
        truncated = kept != result
        result = kept
    if return_notice:
        return result, {"degree_truncated": truncated}
    return result


def linear_poisson_bracket(f: GradedElement, g: GradedElement,
                           lie: LieData) -> GradedElement:
    """{x_a, x_b} = sum_c f_ab^c x_c extended as a biderivation."""
    t = f.table
    out = t.zero()
    names = t.base_names
    for a in range(lie.n):
        dfa = f.d(names[a])
        if dfa.is_zero():
            continue
        for b in range(lie.n):
            dgb = g.d(names[b])
            if dgb.is_zero():
                continue
            for c, v in lie.bracket_coeffs(a, b):
                out = out + (dfa * dgb * t.var(names[c])).scale(v)
    return out
