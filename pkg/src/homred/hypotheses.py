"""Checkable hypotheses: equivariance, the nonpositivity cone test, rank probes.

The cone test decides, by exact Fourier-Motzkin elimination, whether the
convex cone spanned by the torus weight vectors is all of their linear span;
equivalently no dual vector pairs nonpositively with every weight and
strictly negatively with one.  Rank probes evaluate the moment map Jacobian
at exact rational points of the zero fibre.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from .algebra import GradedElement, super_poisson
from .koszul import Setup, SetupError
from .linalg import row_echelon


@dataclass
class EquivarianceVerdict:
    ok: bool
    residuals: Dict[Tuple[int, int], GradedElement]

    def __bool__(self) -> bool:
        return self.ok


def equivariance_first_class(setup: Setup) -> EquivarianceVerdict:
    """{J_a, J_b} - f_ab^c J_c, symbolically; zero means first class."""
    from .brst import equivariance_residuals
    res = equivariance_residuals(setup)
    return EquivarianceVerdict(all(v.is_zero() for v in res.values()), res)


# -- Fourier-Motzkin ------------------------------------------------------------------

Ineq = Tuple[Tuple[Fraction, ...], Fraction]  # coeffs . xi <= bound


def _fm_eliminate(ineqs: List[Ineq], var: int) -> List[Ineq]:
    pos, neg, zero = [], [], []
    for coeffs, b in ineqs:
        c = coeffs[var]
        if c > 0:
            pos.append((coeffs, b))
        elif c < 0:
            neg.append((coeffs, b))
        else:
            zero.append((coeffs, b))
    out = list(zero)
    for pc, pb in pos:
        for nc, nb in neg:
            # combine to cancel var: (1/p) * pos + (-1/n) * neg
            p = pc[var]
            n = -nc[var]
            coeffs = tuple(a / p + c / n for a, c in zip(pc, nc))
            out.append((coeffs, pb / p + nb / n))
    return out


def fm_feasible(ineqs: List[Ineq], nvars: int) -> Optional[List[Fraction]]:
    """A rational solution of the <= system, or None.

    Eliminates variables left to right, then back-substitutes a witness.
    """
    stack = [list(ineqs)]
    for var in range(nvars):
        stack.append(_fm_eliminate(stack[-1], var))
    for coeffs, b in stack[-1]:
        if b < 0:
            return None
    witness: List[Fraction] = [Fraction(0)] * nvars
    for var in range(nvars - 1, -1, -1):
        lo, hi = None, None
        for coeffs, b in stack[var]:
            c = coeffs[var]
            if c == 0:
                continue
            rest = b - sum(coeffs[j] * witness[j]
                           for j in range(var + 1, nvars))
            if c > 0:
                bound = rest / c
                hi = bound if hi is None else min(hi, bound)
            else:
                bound = rest / c
                lo = bound if lo is None else max(lo, bound)
        if lo is None and hi is None:
            witness[var] = Fraction(0)
        elif lo is None:
            witness[var] = min(hi, Fraction(0))
        elif hi is None:
            witness[var] = max(lo, Fraction(0))
        else:
            witness[var] = (lo + hi) / 2
    return witness


@dataclass
class ConeVerdict:
    ok: bool
    witness: Optional[Tuple[Fraction, ...]] = None  # separating dual vector

    def __bool__(self) -> bool:
        return self.ok


def cone_test(weights: Sequence[Sequence[int]]) -> ConeVerdict:
    """True iff the cone generated by the weight columns equals their span.

    ``weights`` has one row per torus factor and one column per coordinate
    pair; the test fails iff some xi satisfies <xi, w_j> <= 0 for all j with
    one pairing strictly negative, and that xi is returned as the witness.
    """
    if not weights:
        return ConeVerdict(True)
    rows = len(weights)
    cols = len(weights[0])
    vecs = [tuple(Fraction(weights[r][j]) for r in range(rows))
            for j in range(cols)]
    for j0 in range(cols):
        ineqs: List[Ineq] = [(v, Fraction(0)) for v in vecs]
        ineqs.append((vecs[j0], Fraction(-1)))
        sol = fm_feasible(ineqs, rows)
        if sol is not None:
            return ConeVerdict(False, tuple(sol))
    return ConeVerdict(True)


# -- Jacobian rank probes ---------------------------------------------------------------


class PointRejected(ValueError):
    def __init__(self, point, values):
        super().__init__(
            f"point {point} is not on the zero fibre: J = {values}")
        self.values = values


@dataclass
class RankProbe:
    point: Tuple[Fraction, ...]
    rank: int


@dataclass
class RankProbeTable:
    ell: int
    probes: List[RankProbe]

    @property
    def max_rank(self) -> int:
        return max((p.rank for p in self.probes), default=0)

    @property
    def full_rank_attained(self) -> bool:
        return self.max_rank == self.ell

    @property
    def regular_stratum_evidence_empty(self) -> bool:
        return all(p.rank < self.ell for p in self.probes)


def rank_probe(setup: Setup, points: Optional[Sequence[Sequence]] = None
               ) -> RankProbeTable:
    """Exact Jacobian rank of the moment map at rational points of Z."""
    pts = points if points is not None else setup.points
    t = setup.table()
    J = setup.moment_elements(t)
    names = t.base_names
    probes = []
    for p in pts:
        point = tuple(Fraction(x) for x in p)
        vals = setup.moment_values(point)
        if any(vals):
            raise PointRejected(point, vals)
        rows = []
        for a in range(setup.ell):
            row = {}
            for i in range(setup.base_dim):
                v = J[a].d(names[i]).evaluate(point)
                if v:
                    row[i] = v
            rows.append(row)
        rk = len(row_echelon(rows, setup.base_dim)[1])
        probes.append(RankProbe(point, rk))
    return RankProbeTable(setup.ell, probes)
