"""Free locally finite Koszul-Tate resolutions, built level by level.

Each extension step computes a homology basis of the current complex on the
weighted slices inside the degree cap and adjoins one level-j generator per
class, with its differential the chosen cycle representative.  Counts are
lower bounds: a cycle living above the cap is invisible, and for rings that
are not complete intersections the true resolution never terminates.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from . import hpt
from .algebra import (ANTIGHOST, GHOST, GradedElement, GeneratorTable,
                      TruncationPolicy, mul, tate_generator)
from .koszul import (AcyclicityError, EchelonSolver, Row, Setup, SetupError,
                     base_monomials, ghost_nu_extend, k_slice_monomials,
                     nullspace, row_echelon)


class CapError(SetupError):
    pass


@dataclass
class TateResolution:
    """A level-truncated Koszul-Tate complex over a Setup.

    ``differentials`` maps each antighost slot to its image under the
    derivation; level-1 slots carry the moment components, higher slots
    cycle representatives in strictly lower-level variables.
    """

    setup: Setup
    table: GeneratorTable
    differentials: Dict[int, GradedElement]
    gen_weights: Dict[int, int]
    max_level: int

    @classmethod
    def level_one(cls, setup: Setup) -> "TateResolution":
        r = setup.homogeneity()
        if r is None:
            raise SetupError("Tate resolutions need a homogeneous moment map")
        t = setup.table()
        J = setup.moment_elements(t)
        diffs = {s: J[t.generators[s].index] for s in t.antighost_slots(1)}
        gw = {s: r for s in t.antighost_slots(1)}
        return cls(setup, t, diffs, gw, 1)

    # -- the assembled derivation --------------------------------------------

    def differential(self, a: GradedElement) -> GradedElement:
        if a.table != self.table:
            raise ValueError("element lives on a different table")
        out = self.table.zero()
        for slot, J in self.differentials.items():
            da = a.d(self.table.generators[slot].name)
            if not da.is_zero():
                out = out + mul(J, da)
        return out

    def level_counts(self) -> Dict[int, int]:
        counts: Dict[int, int] = {}
        for s in self.table.antighost_slots():
            lvl = self.table.generators[s].level
            counts[lvl] = counts.get(lvl, 0) + 1
        return counts

    def slice_monomials(self, d: int, k: int) -> List[tuple]:
        return k_slice_monomials(self.table, self.gen_weights, d, k)

    def check_differential_squares_to_zero(self, max_weight: int,
                                           max_k: int) -> bool:
        for d in range(max_weight + 1):
            for k in range(max_k + 1):
                for m in self.slice_monomials(d, k):
                    e = GradedElement(self.table, {m: Fraction(1)})
                    if not self.differential(self.differential(e)).is_zero():
                        return False
        return True

    def homology_dims(self, max_weight: int, ks: Iterable[int]
                      ) -> Dict[Tuple[int, int], int]:
        out = {}
        for d in range(max_weight + 1):
            for k in ks:
                _cycles, dim = self._slice_homology(d, k)
                out[(d, k)] = dim
        return out

    # -- slice homology --------------------------------------------------------

    def _diff_columns(self, d: int, k: int, target_index) -> List[Row]:
        cols = []
        for m in self.slice_monomials(d, k):
            e = self.differential(GradedElement(self.table, {m: Fraction(1)}))
            col: Row = {}
            for mono, c in e.terms.items():
                col[target_index[mono]] = c
            cols.append(col)
        return cols

    def _slice_homology(self, d: int, k: int):
        """(cycle representative elements, dim H_k) on the weight-d slice."""
        source = self.slice_monomials(d, k)
        if not source:
            return [], 0
        below = self.slice_monomials(d, k - 1) if k else []
        bindex = {m: i for i, m in enumerate(below)}
        sindex = {m: i for i, m in enumerate(source)}
        if k:
            rows = [{} for _ in below]
            for j, col in enumerate(self._diff_columns(d, k, bindex)):
                for i, v in col.items():
                    rows[i][j] = v
            cycles = nullspace(rows, len(source))
        else:
            cycles = [{i: Fraction(1)} for i in range(len(source))]
        bcols = self._diff_columns(d, k + 1, sindex)
        reps: List[GradedElement] = []
        chosen: List[Row] = []
        span_solver = EchelonSolver(bcols, len(source))
        for vec in cycles:
            resid = _reduce(vec, span_solver, chosen)
            if resid:
                chosen.append(resid)
                reps.append(GradedElement(
                    self.table, {source[i]: v for i, v in resid.items()}))
        return reps, len(reps)


def _reduce(vec: Row, base: EchelonSolver, extra: Sequence[Row]) -> Optional[Row]:
    resid = dict(vec)
    for red, _ in base._elim:
        lead = min(red)
        f = resid.get(lead)
        if f:
            for c, v in red.items():
                val = resid.get(c, Fraction(0)) - f * v
                if val:
                    resid[c] = val
                else:
                    resid.pop(c, None)
    for row in extra:
        lead = min(row)
        f = resid.get(lead)
        if f:
            lv = row[lead]
            for c, v in row.items():
                val = resid.get(c, Fraction(0)) - f * v / lv
                if val:
                    resid[c] = val
                else:
                    resid.pop(c, None)
    return resid or None


def extend_level(partial: TateResolution, j: int,
                 policy: TruncationPolicy) -> TateResolution:
    """Kill H_{j-1} on slices within the degree cap by level-j generators."""
    if j != partial.max_level + 1:
        raise SetupError(f"can only extend level {partial.max_level} by {partial.max_level + 1}")
    D = policy.poly_degree if policy.poly_degree is not None else 6
    reps: List[Tuple[int, GradedElement]] = []
    for d in range(D + 1):
        slice_reps, _dim = partial._slice_homology(d, j - 1)
        for rep in slice_reps:
            reps.append((d, rep))
    old = partial.table
    gens = []
    for idx in range(len(reps)):
        gens.append(tate_generator(j, idx, ANTIGHOST))
        gens.append(tate_generator(j, idx, GHOST))
    new_table, embed = old.extend(gens)
    diffs = {slot: embed(e) for slot, e in partial.differentials.items()}
    gw = dict(partial.gen_weights)
    for idx, (d, rep) in enumerate(reps):
        slot = new_table.slot(tate_generator(j, idx, ANTIGHOST).name)
        diffs[slot] = embed(rep)
        gw[slot] = d
    res = TateResolution(partial.setup, new_table, diffs, gw, j)
    if not res.check_differential_squares_to_zero(min(D, 6), j + 1):
        raise SetupError("extended Tate differential fails to square to zero")
    return res


def build_resolution(setup: Setup, level: int,
                     policy: TruncationPolicy) -> TateResolution:
    res = TateResolution.level_one(setup)
    for j in range(2, level + 1):
        res = extend_level(res, j, policy)
    return res


# -- Poincare series bookkeeping --------------------------------------------------


def _series_mul(a: List[int], b: List[int], cap: int) -> List[int]:
    out = [0] * (cap + 1)
    for i, ai in enumerate(a):
        if ai:
            for jj, bj in enumerate(b):
                if i + jj <= cap:
                    out[i + jj] += ai * bj
    return out


def _series_geom(j: int, power: int, cap: int) -> List[int]:
    """(1 - t^j)^{-power} truncated, by repeated multiplication."""
    base = [0] * (cap + 1)
    for k in range(0, cap + 1, j):
        base[k] = 1
    out = [1] + [0] * cap
    for _ in range(power):
        out = _series_mul(out, base, cap)
    return out


def poincare_check(res: TateResolution, policy: TruncationPolicy
                   ) -> Tuple[bool, List[int], List[int]]:
    """Verify sum rank(KT_i) t^i = prod_j (1-(-t)^j)^{(-1)^{j+1} l_j}.

    The left side counts antighost monomials of each homological degree by
    direct enumeration; the right is the closed-form product over discovered
    generator counts, expanded to the same order.
    """
    cap = policy.poly_degree if policy.poly_degree is not None else 6
    t = res.table
    lhs = []
    for i in range(cap + 1):
        count = 0
        for g, _w in _antighost_words_unweighted(t, i):
            count += 1
        lhs.append(count)
    rhs = [1] + [0] * cap
    counts = res.level_counts()
    for j, lj in sorted(counts.items()):
        if j & 1:
            # (1 + t^j)^{l_j}
            binom = [0] * (cap + 1)
            binom[0] = 1
            if j <= cap:
                binom[j] = 1
            for _ in range(lj):
                rhs = _series_mul(rhs, binom, cap)
        else:
            rhs = _series_mul(rhs, _series_geom(j, lj, cap), cap)
    return lhs == rhs, lhs, rhs


def _antighost_words_unweighted(table: GeneratorTable, kdeg: int):
    from .koszul import antighost_words
    gw = {s: 0 for s in table.antighost_slots()}
    return antighost_words(table, gw, kdeg, 0)


# -- contraction for the extended complex ------------------------------------------


def tate_contraction(res: TateResolution, policy: TruncationPolicy,
                     max_k: Optional[int] = None) -> hpt.Contraction:
    """Slice-solved contraction of the Tate complex onto its normal forms.

    Same construction as the Koszul slice contraction, but over all levels of
    the resolution; used by the charge recursion to solve d Q = -r.
    """
    from .koszul import NormalForms

    setup = res.setup
    t = res.table
    nf = NormalForms(setup, t)
    gw = res.gen_weights
    kmax = max_k if max_k is not None else (res.max_level + 2)

    def res_core(elem: GradedElement) -> GradedElement:
        out: Dict[tuple, Fraction] = {}
        zg = (0,) * t.ngen
        for (b, g, nu), c in elem.terms.items():
            if any(g):
                continue
            for k, v in nf.normal_form({b: c}).items():
                key = (k, zg, 0)
                val = out.get(key, Fraction(0)) + v
                if val:
                    out[key] = val
                else:
                    out.pop(key, None)
        return GradedElement(t, out)

    solver_cache: Dict[Tuple[int, int], tuple] = {}
    hmap_cache: Dict[Tuple[int, int], Dict[tuple, GradedElement]] = {}

    def _solver(d: int, k: int):
        key = (d, k)
        if key not in solver_cache:
            source = res.slice_monomials(d, k)
            target = res.slice_monomials(d, k - 1)
            tindex = {mm: i for i, mm in enumerate(target)}
            cols = res._diff_columns(d, k, tindex)
            solver_cache[key] = (EchelonSolver(cols, len(target)), source, tindex)
        return solver_cache[key]

    def _weight(mono) -> Tuple[int, int]:
        b, g, _ = mono
        k = sum(e * t.generators[i].level for i, e in enumerate(g)
                if t.generators[i].kind == ANTIGHOST)
        d = sum(b) + sum(e * gw[i] for i, e in enumerate(g)
                         if t.generators[i].kind == ANTIGHOST)
        return d, k

    def _h_mono(d: int, k: int, mono) -> GradedElement:
        cache = hmap_cache.setdefault((d, k), {})
        if mono in cache:
            return cache[mono]
        e = GradedElement(t, {mono: Fraction(1)})
        if k == 0:
            out = nf.homotopy0({mono[0]: Fraction(1)})
        else:
            rhs = e - _h_apply(res.differential(e))
            solver, source, tindex = _solver(d, k + 1)
            vec: Row = {}
            for mm, c in rhs.terms.items():
                vec[tindex[mm]] = c
            sol = solver.solve(vec)
            if sol is None:
                raise CapError(
                    f"homotopy slice solve failed at weight {d}, degree {k}: "
                    "raise the degree cap or extend the resolution")
            out = GradedElement(t, {source[i]: v for i, v in sol.items()})
        cache[mono] = out
        return out

    def _h_apply(elem: GradedElement) -> GradedElement:
        out = t.zero()
        for mono, c in elem.terms.items():
            d, k = _weight(mono)
            out = out + _h_mono(d, k, mono).scale(c)
        return out

    h = ghost_nu_extend(t, _h_apply, odd=True)
    resmap = ghost_nu_extend(t, res_core, odd=False)
    prol = ghost_nu_extend(t, lambda e: e, odd=False)

    def big_basis(weight: int = 4, max_k_: Optional[int] = None):
        kk = max_k_ if max_k_ is not None else kmax
        return [GradedElement(t, {mm: Fraction(1)})
                for d in range(weight + 1)
                for k in range(kk + 1)
                for mm in res.slice_monomials(d, k)]

    def small_basis(weight: int = 4, **_):
        zg = (0,) * t.ngen
        return [GradedElement(t, {(b, zg, 0): Fraction(1)})
                for d in range(weight + 1) for b in nf.normal_basis(d)]

    big = hpt.Complex("koszul-tate", res.differential, degree=-1,
                      slice_basis=big_basis)
    small = hpt.Complex("functions-on-Z", lambda a: t.zero(), degree=0,
                        slice_basis=small_basis)
    return hpt.Contraction(small, big, inject=prol, project=resmap, homotopy=h)
