"""Exact sparse linear algebra over the rationals.

Rows are dicts {column: Fraction}.  Pivoting is deterministic (first row with
a nonzero entry in the lowest unprocessed column) so every downstream choice
of complement, homotopy and representative is reproducible.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

Row = Dict[int, Fraction]


def _clean(row: Row) -> Row:
    return {c: v for c, v in row.items() if v != 0}


def row_echelon(rows: Sequence[Row], ncols: int) -> Tuple[List[Row], List[int]]:
    """Reduced row echelon form. Returns (rref rows, pivot columns)."""
    work = [dict(r) for r in rows]
    pivots: List[int] = []
    pivot_rows: List[Row] = []
    remaining = [r for r in work if r]
    for col in range(ncols):
        hit = None
        for idx, r in enumerate(remaining):
            if r.get(col):
                hit = idx
                break
        if hit is None:
            continue
        piv = remaining.pop(hit)
        inv = 1 / piv[col]
        piv = {c: v * inv for c, v in piv.items()}
        # eliminate col from every other stored row
        for rlist in (pivot_rows, remaining):
            for i, r in enumerate(rlist):
                f = r.get(col)
                if f:
                    new = dict(r)
                    for c, v in piv.items():
                        val = new.get(c, Fraction(0)) - f * v
                        if val:
                            new[c] = val
                        else:
                            new.pop(c, None)
                    rlist[i] = new
        remaining = [r for r in remaining if r]
        pivot_rows.append(piv)
        pivots.append(col)
    return pivot_rows, pivots


def rank(rows: Sequence[Row], ncols: int) -> int:
    return len(row_echelon(rows, ncols)[1])


class EchelonSolver:
    """Reusable solver for A x = b with A given by columns.

    Columns are reduced once; each solve is a back-substitution.  Solutions
    are minimal-support with respect to the deterministic pivot choice: free
    variables are set to zero.
    """

    def __init__(self, columns: Sequence[Row], nrows: int):
        self.ncols = len(columns)
        self.nrows = nrows
        # eliminate on rows of the transpose? No: keep (A | I) row-reduced in
        # column space: store for each pivot row the combination of columns.
        self._pivot_of_row: Dict[int, int] = {}
        self._elim: List[Tuple[Row, Row]] = []  # (reduced column, combination)
        for j, col in enumerate(columns):
            cur = dict(col)
            comb: Row = {j: Fraction(1)}
            for red, rcomb in self._elim:
                lead = min(red)
                f = cur.get(lead)
                if f:
                    for c, v in red.items():
                        val = cur.get(c, Fraction(0)) - f * v
                        if val:
                            cur[c] = val
                        else:
                            cur.pop(c, None)
                    for c, v in rcomb.items():
                        val = comb.get(c, Fraction(0)) - f * v
                        if val:
                            comb[c] = val
                        else:
                            comb.pop(c, None)
            if cur:
                lead = min(cur)
                inv = 1 / cur[lead]
                cur = {c: v * inv for c, v in cur.items()}
                comb = {c: v * inv for c, v in comb.items()}
                # back-eliminate the new lead from the stored pivots so that
                # every pivot column vanishes on every other pivot's lead row
                for k, (red, rcomb) in enumerate(self._elim):
                    f = red.get(lead)
                    if f:
                        nred = dict(red)
                        ncomb = dict(rcomb)
                        for c, v in cur.items():
                            val = nred.get(c, Fraction(0)) - f * v
                            if val:
                                nred[c] = val
                            else:
                                nred.pop(c, None)
                        for c, v in comb.items():
                            val = ncomb.get(c, Fraction(0)) - f * v
                            if val:
                                ncomb[c] = val
                            else:
                                ncomb.pop(c, None)
                        self._elim[k] = (nred, ncomb)
                self._elim.append((cur, comb))

    @property
    def rank(self) -> int:
        return len(self._elim)

    def solve(self, b: Row) -> Optional[Row]:
        """One solution of A x = b, or None if b is not in the column span."""
        resid = dict(b)
        x: Row = {}
        for red, comb in self._elim:
            lead = min(red)
            f = resid.get(lead)
            if f:
                for c, v in red.items():
                    val = resid.get(c, Fraction(0)) - f * v
                    if val:
                        resid[c] = val
                    else:
                        resid.pop(c, None)
                for c, v in comb.items():
                    val = x.get(c, Fraction(0)) + f * v
                    if val:
                        x[c] = val
                    else:
                        x.pop(c, None)
        if resid:
            return None
        return x

    def in_span(self, b: Row) -> bool:
        return self.solve(b) is not None


def nullspace(rows: Sequence[Row], ncols: int) -> List[Row]:
    """Basis of the right kernel of the matrix whose rows are given."""
    rref, pivots = row_echelon(rows, ncols)
    pivot_set = set(pivots)
    basis: List[Row] = []
    for free in range(ncols):
        if free in pivot_set:
            continue
        vec: Row = {free: Fraction(1)}
        for row, pc in zip(rref, pivots):
            f = row.get(free)
            if f:
                vec[pc] = -f
        basis.append(vec)
    return basis
